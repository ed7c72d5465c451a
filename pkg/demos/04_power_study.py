"""
A small power study
===================

Testing normality against Student-t data of decreasing degrees of freedom.
The bundled ``example1`` spec runs the full grid; here a reduced copy keeps
it to a few seconds. Rates at nu = inf are the size of each test; with
100 trials they wander a few points around 0.05.
"""

from ecfgof.harness import load_spec, run_experiment, with_overrides

spec = load_spec("example1")
spec = with_overrides(spec, dims=(2,), sizes=(50,), trials=100, M=200)

table = run_experiment(spec)
tests = [t.name for t in spec.tests]
print("nu      " + "".join(f"{name:>8}" for name in tests))
for value in spec.grid:
    print(f"{value:<8g}" + "".join(f"{table.rate(name, value):8.2f}" for name in tests))

# the same table as CSV, ready for plotting
print()
print(table.to_csv().splitlines()[0])
