from devito import *
import numpy as np

grid = Grid(shape=(101,), extent=(1.0,))
u = TimeFunction(name='u', grid=grid, space_order=1)
dt, c, nx, nsteps = 1e-4, 1.0, 100, 500

# 1-based indexing + variable name typo (nu_data not defined)
u_data = np.zeros((nx + 1), dtype=np.float64)
for i in range(1, nx + 1):
    x = (i - 1) * 0.01
    if 0.2 <= x <= 0.4:
        nu_data[i] = 1.0
    u.data[0][1:] = nu_data # typo + offset assignment

# Operator(bc=...) not valid API; SubDomain one-liner incorrect
bcs = [SubDomain('x==0', {'u': 0}), SubDomain('x==1', {'u': 0})]
eq = Eq(u.dt, -c * u.dx) # also uses central diff instead of upwind
op = Operator(eq, bc=bcs) # invalid/legacy API usage
op.apply(time_M=nsteps-1, dt=dt)
