from devito import Grid, TimeFunction, Eq, Operator, Constant, first_derivative
import numpy as np

nx, Lx = 100, 1.0
dx = Lx / nx
dt_val, c_val = 0.005, 1.0

grid = Grid(shape=(nx,), extent=(Lx,))
x, = grid.dimensions
u = TimeFunction(name='u', grid=grid, time_order=1, space_order=1)
c = Constant(name='c', value=c_val)

xcoords = np.linspace(0.0, Lx - dx, nx, dtype=np.float32)
u.data[0, :] = ((xcoords > 0.2) & (xcoords < 0.4)).astype(np.float32)

du_dx = first_derivative(u, dim=x, side='left') # c>0 -> left
core = Eq(u.forward, u - dt_val * c * du_dx)

# Periodic BC: endpoints equal
left_bc = Eq(u.forward.subs({x: x.symbolic_min}), u.forward.subs({x: x.symbolic_max}))
right_bc = Eq(u.forward.subs({x: x.symbolic_max}), u.forward.subs({x: x.symbolic_min}))

op = Operator([core, left_bc, right_bc])
op.apply(time_M=499)
