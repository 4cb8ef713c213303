import sys
import time

from pilotwave import scenarios as sc

names = sys.argv[1:] or ["bernoulli_decay", "kinetic_relax",
                         "typicality_bounds", "functional_probe",
                         "trajectory_transport", "relax_2mode_box"]
for name in names:
    t0 = time.time()
    scen = sc.load_scenario(sc.bundled_scenario_path(name))
    res = sc.run_scenario(scen, "/tmp/scen_out", strict=True)
    dt = time.time() - t0
    status = "OK " if res.passed else "FAIL"
    print(f"{status} {name}: {dt:.1f}s (budget {res.budget_seconds:g})")
    for a in res.assertions:
        mark = "pass" if a.passed else "FAIL"
        print(f"    [{mark}] {a.name}: {a.detail}")
