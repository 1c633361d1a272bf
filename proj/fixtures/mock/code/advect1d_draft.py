from devito import Grid, TimeFunction, Eq, Operator, Constant
import numpy as np

nx, nt = 100, 200
dx = 0.01
dt = 0.005
c = Constant(name='c', value=1.0)

grid = Grid(shape=(nx,), extent=((nx - 1) * dx,))
x, = grid.dimensions
u = TimeFunction(name='u', grid=grid, time_order=1, space_order=2)
xs = (np.arange(nx) + 1) * dx
u.data[0, :] = np.exp(-200.0 * (xs - 0.3) ** 2)

update = Eq(u.forward, u - dt * c * u.dx)
left = Eq(u.forward.subs({x: x.symbolic_min}), 0.0)

op = Operator([update, left])
op.apply(time_M=nt - 1)
print(u.data[0].max())
