"""
E-process vs private SPRT
=========================

A reduced version of the comparison grid. The full one runs with
``dpevalues compare`` and writes CSVs and ECDF plots.
"""

# %%
from dpevalues.harness import ExperimentConfig, compare_report, run_compare

config = ExperimentConfig(epsilons=(1.0, 2.0), qs=(0.6, 0.9), trials=40)
result = run_compare(config, write=False)
print(compare_report(config, result))

# %%
# The baseline's margins are union bounds over every time step, which makes
# it cautious; the gap in the table is partly due to that.
for cell in result.cells:
    ratio = cell["median_dpsprt"] / cell["median_eprocess"]
    print(f"eps={cell['epsilon']:g} q={cell['q']:g}: DP-SPRT needs {ratio:.1f}x more samples (median)")
