"""How tight is the two-sided model for the heat kernel?

Scans H / DM over a log grid, shows which parameter regions attain the
extremes, and checks that refining the grid does not move them.
"""

from hypkernel.bounds_verifier import STANDARD_GRID, dm_ratio_scan, uncovered_nodes

for n in (1, 2, 4):
    coarse = dm_ratio_scan(n, STANDARD_GRID)
    fine = dm_ratio_scan(n, STANDARD_GRID.refined())
    print(f"n = {n}: H/DM in [{coarse.inf_ratio:.6g}, {coarse.sup_ratio:.6g}]"
          f"  refined [{fine.inf_ratio:.6g}, {fine.sup_ratio:.6g}]")
    print(f"        min at (r, t) = {coarse.arg_inf}, max at {coarse.arg_sup}")

print("uncovered grid nodes with default region constants:", len(uncovered_nodes(STANDARD_GRID)))
