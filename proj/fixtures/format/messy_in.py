import numpy as np
import sys
from devito import Grid, TimeFunction, Eq, Operator
import devito
import os   



grid = Grid(shape=(4, 4))   
u = TimeFunction(name="u", grid=grid)




op = Operator([Eq(u.forward, u + 1)])




def run(steps):
    
    
    op.apply(time_M=steps)
    return np.sum(u.data) + len(sys.argv) + len(os.sep) + devito.__version__.count(".")



