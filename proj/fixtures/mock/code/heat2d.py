from devito import Grid, TimeFunction, Eq, Operator, Constant, solve
import numpy as np

nx, ny, nt = 41, 41, 100
alpha = 0.5
spacing = 0.05
dt = 0.001

grid = Grid(shape=(nx, ny), extent=((nx - 1) * spacing, (ny - 1) * spacing))
x, y = grid.dimensions
t = grid.stepping_dim
u = TimeFunction(name='u', grid=grid, time_order=1, space_order=2)
a = Constant(name='a', value=alpha)

u.data[:] = 0.0
u.data[:, 9:20, 9:20] = 1.0

pde = Eq(u.dt, a * u.laplace)
update = Eq(u.forward, solve(pde, u.forward), subdomain=grid.interior)
bcs = [
    Eq(u[t + 1, 0, y], 0.0),
    Eq(u[t + 1, nx - 1, y], 0.0),
    Eq(u[t + 1, x, 0], 0.0),
    Eq(u[t + 1, x, ny - 1], 0.0),
]

op = Operator([update] + bcs)
op.apply(time_M=nt - 1, dt=dt)
print(np.sum(u.data[0]))
