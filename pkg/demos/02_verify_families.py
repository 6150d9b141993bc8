"""Check closed-form soliton families on lattices and watch lambda errors show up."""
from qkyamabe.builder import REFERENCE_CASES, closed_form_family
from qkyamabe.soliton import verify_on_grid

for family, n, k, m, consts in REFERENCE_CASES:
    c = closed_form_family(family, n, k, m, **consts)
    res = verify_on_grid(c, c.box, samples=3)
    print(f"{family:8s} n={n} k={k} m={m:5.1f} lambda={c.lam:10.5f}  max residual {res.max_residual:.1e}")

# a wrong soliton constant leaves a trace defect of exactly n * delta
c = closed_form_family("1.6", 4, 2, 1.0)
for delta in (0.01, 0.1, 1.0):
    res = verify_on_grid(c.with_lambda(c.lam + delta), c.box, samples=3)
    print(f"delta={delta}: trace defect {res.max_trace_defect:.6f}")

# per-point CSV, first few lines
print(verify_on_grid(c, c.box, samples=2).to_csv().splitlines()[:3])
