from devito import Grid, TimeFunction, Eq, Operator, Constant, first_derivative
import numpy as np

nx, Lx = 100, 1.0
grid = Grid(shape=(nx,), extent=(Lx,))
x, = grid.dimensions
u = TimeFunction(name='u', grid=grid, time_order=1, space_order=1)

initial = np.zeros(nx, dtype=np.float64)
xs = np.arange(nx) * (Lx / nx)
initial[(xs >= 0.2) & (xs <= 0.4)] = 1.0
u.data[0, :] = initial

dt_val, c = 1e-4, 1.0
core = Eq(u.forward, u - dt_val * c * u.dx) # use first_derivative(...) for upwind

left_bc = Eq(u.forward.subs({x: x.symbolic_min}), 0.0)
right_bc = Eq(u.forward.subs({x: x.symbolic_max}), 0.0)

op = Operator([core, left_bc, right_bc])
op.apply(time_M=499)
