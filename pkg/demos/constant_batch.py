"""
Constant batches leave a residual
=================================

With a fixed batch the error stalls at a level that shrinks as the batch
constant c grows and grows with the delay tolerance tau.
"""

# %%
from asyncfw.algorithms import run_sfw, run_sfw_asyn
from asyncfw.harness import plateau
from asyncfw.objectives import estimate_constants, generate_matrix_sensing
from asyncfw.schedules import constant_batch_schedule
from asyncfw.simulator import GeometricComputeModel, SimulatedTransport

problem = generate_matrix_sensing(10, 10, 2, 8000, seed=0)
constants = estimate_constants(problem, seed=0)

# %%
# Sequential SFW: larger c, larger batch, lower plateau
for c in (5, 10, 20):
    s = constant_batch_schedule(constants, c)
    res = run_sfw(problem, s, 500)
    print(f"c = {c:2d}  batch {s.batch(1):5d}  plateau {plateau(res.objectives()):.2e}")

# %%
# Asynchronous SFW at c = 10: the batch shrinks by tau^2 and staleness adds error
for tau in (1, 2, 4):
    s = constant_batch_schedule(constants, 10, tau=tau)
    res = run_sfw_asyn(problem, s, 500, 4, SimulatedTransport(GeometricComputeModel(0.1)))
    print(f"tau = {tau}  batch {s.batch(1):5d}  plateau {plateau(res.objectives()):.2e}")
