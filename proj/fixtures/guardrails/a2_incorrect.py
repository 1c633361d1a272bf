from devito import Grid, TimeFunction, Eq, Operator # imported but never used
import numpy as np

nx, Lx = 100, 1.0
dx = Lx / nx
dt, c = 0.005, 1.0

# Allocate manual NumPy array (ignores Devito TimeFunction)
u = np.zeros((501, nx), dtype=np.float32)
xcoords = np.linspace(0.0, Lx - dx, nx, dtype=np.float32)
u[0, (xcoords > 0.2) & (xcoords < 0.4)] = 1.0

# Manual time stepping loop
for t in range(500):
    u_next = u[t].copy()
    for i in range(1, nx):
        du_dx = (u[t, i] - u[t, i-1]) / dx
        u_next[i] = u[t, i] - dt * c * du_dx
    # Incorrect periodic boundary: patched after update
    u_next[0] = u_next[-1]
    u[t+1] = u_next
