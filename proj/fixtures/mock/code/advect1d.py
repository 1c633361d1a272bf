from devito import Grid, TimeFunction, Eq, Operator, Constant, first_derivative
import numpy as np

nx, nt = 100, 200
dx = 0.01
dt = 0.005
c = Constant(name='c', value=1.0)

grid = Grid(shape=(nx,), extent=((nx - 1) * dx,))
x, = grid.dimensions
u = TimeFunction(name='u', grid=grid, time_order=1, space_order=1)
xs = (np.arange(nx) + 1) * dx
u.data[0, :] = np.exp(-200.0 * (xs - 0.3) ** 2)

du_dx = first_derivative(u, dim=x, side='left')
update = Eq(u.forward, u - dt * c * du_dx)
inflow = Eq(u.forward.subs({x: x.symbolic_min}), u.forward.subs({x: x.symbolic_max}))

op = Operator([update, inflow])
op.apply(time_M=nt - 1)
print(u.data[0].max())
