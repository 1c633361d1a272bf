from devito import Grid, TimeFunction, Eq, Operator
import numpy as np

nx, nt = 201, 500
c, dx, dt = 1.0, 0.005, 0.0025
r2 = (c * dt / dx) ** 2

u = np.zeros(nx)
u[99] = 1.0
uold = u.copy()
unew = np.zeros(nx)
for n in range(nt):
    for i in range(1, nx - 1):
        unew[i] = 2.0 * u[i] - uold[i] + r2 * (u[i + 1] - 2.0 * u[i] + u[i - 1])
    unew[0] = unew[1]
    unew[nx - 1] = unew[nx - 2]
    uold[:] = u
    u[:] = unew
print(u.max())
