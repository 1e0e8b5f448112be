#!/usr/bin/env python3
"""External-solver adapter: highs_solver.py <model.mps> <solution.txt>.

Writes `status <optimal|feasible|infeasible>` followed by one
`name value` line per column. Honours FSUC_TIME_LIMIT (seconds).
"""
import os
import sys

import highspy


def main() -> int:
    if len(sys.argv) != 3:
        print("usage: highs_solver.py model.mps solution.txt", file=sys.stderr)
        return 2
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 1e-6)
    if "FSUC_TIME_LIMIT" in os.environ:
        h.setOptionValue("time_limit", float(os.environ["FSUC_TIME_LIMIT"]))
    if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
        print("cannot read " + sys.argv[1], file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    with open(sys.argv[2], "w") as out:
        if status == highspy.HighsModelStatus.kInfeasible:
            out.write("status infeasible\n")
            return 0
        if h.getInfo().primal_solution_status != 2:  # no feasible point
            return 1
        out.write("status %s\n" % ("optimal" if status == highspy.HighsModelStatus.kOptimal else "feasible"))
        lp = h.getLp()
        values = h.getSolution().col_value
        for name, v in zip(lp.col_names_, values):
            out.write("%s %.17g\n" % (name, v))
    return 0


if __name__ == "__main__":
    sys.exit(main())
