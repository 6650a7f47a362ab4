"""Commutator maneuvers: synthesizing new control directions by pulsing.

The four-segment back-and-forth (+i, +j, -i, -j) of duration t per leg
evolves, to second order in t, along the commutator of the two
generators.  On the bait system the (H_6, H_9) maneuver points along
sigma_x(bait) (x) (w b† + w* b): a control direction that touches the
environment, which no physical control does directly.  Chaining such
maneuvers produces the qubit-bath couplings of the commutator-chain
identities, and, deeper in the bracket algebra, the collective dephasing
generator itself.
"""

import numpy as np

import qdecouple as qd
from qdecouple.algebra import SIGMA_X

params = qd.ScenarioParams()
bait = qd.build_bait(params)

print("== CBH remainder order for the (H_6, H_9) maneuver ==")
t_list = [1e-1, 5e-2, 2.5e-2, 1.25e-2]
rep = qd.cbh_order_check(bait.controls[5], bait.controls[8], t_list)
for t, r in zip(rep.t_list, rep.residuals):
    print(f"  t = {t:<8g} |U(4t) - exp([.,.] t^2)| = {r:.3e}")
print(f"fitted log-log slope: {rep.slope:.3f} (cubic remainder certified at >= 2.7)")

f_w = qd.field_quadrature(params.w, params.n_env).matrix
target = qd.embed_product(bait.space, {"bait": SIGMA_X, "env": f_w}, kind="hermitian").skew()
overlap = qd.effective_direction_overlap(bait.controls[5], bait.controls[8], target, 1e-3)
print(f"effective direction overlap with sigma_x(bait) (x) F at t = 1e-3: {overlap:.7f}")

print("\n== commutator-chain identities ==")
chain = qd.verify_commutator_chain(bait)
for key, row in chain.items():
    line = f"  {key}: target {row['target']:<12} c = {row['c']:+8.3f}  residual {row['residual']:.1e}"
    if "bait_identity_deviation" in row:
        line += f"  bait-identity dev {row['bait_identity_deviation']:.1e}"
    print(line)

print("\n== can the controls generate H_SB itself? ==")
search = qd.hsb_generation_search(bait)
print(f"  proportional triples [[H_a,H_b],H_c]: {search['triple_proportional_matches'] or 'none'}")
print(f"  best triple overlap: {search['best_triple']['overlap']:.2e} ({search['best_triple']['triple']})")
print(f"  H_SB inside the bracket-word closure: {search['closure_contains_interaction']} "
      f"(depth {search['membership_depth']}, closure dim {search['closure_dim']})")
for w in search["witness_words"]:
    print(f"    {w['word']}  coefficient {w['coefficient']:+.4f}")
