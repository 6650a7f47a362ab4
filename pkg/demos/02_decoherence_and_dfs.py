"""Decoherence, the decoherence-free subspace, and how control breaks it.

Three simulations of the coherence functional y(t) = <xi|C|xi>:

  1. a single dephasing qubit loses |y| under free evolution,
  2. the two-qubit DFS state keeps |y| flat despite the coupling,
  3. one control on qubit 1 rotates the state out of the DFS, and the
     coupling then bites -- the problem the whole toolkit is about.
"""

import numpy as np

import qdecouple as qd

T = 20.0

print("== 1. single qubit, free evolution, g = 0.2 ==")
p = qd.ScenarioParams(g=0.2 + 0j)
single = qd.build_single_qubit(p)
xi0 = qd.normalize(single.space, np.kron([1, 1], [1, 0, 0]))
trace = qd.propagate(single, qd.PulseSchedule.constant(T, np.zeros(2)), xi0, dt_max=0.02)
print(f"|y| starts at {abs(trace.y_values[0]):.3f}, ranges "
      f"{trace.abs_y().min():.3f}..{trace.abs_y().max():.3f} over T={T:g}")

print("\n== 2. two qubits, DFS initial state (|01> + |10>)/sqrt(2) ==")
two = qd.build_two_qubit(p)
xi0 = qd.dfs_state(two)
trace = qd.propagate(two, qd.PulseSchedule.constant(T, np.zeros(4)), xi0, dt_max=0.02)
print(f"|y| deviation from 1/2: {np.abs(trace.abs_y() - 0.5).max():.2e} (flat: DFS immunity)")

print("\n== 3. same state, u_1 = 1 rotates qubit 1 ==")
sched = qd.PulseSchedule.constant(T, [1.0, 0, 0, 0])
with_g = qd.propagate(two, sched, xi0, dt_max=0.02)
without = qd.propagate(two, sched, xi0, dt_max=0.02, include_interaction=False)
dev = np.abs(np.abs(with_g.y_values) - np.abs(without.y_values)).max()
print(f"max ||y_g| - |y_0|| = {dev:.3f}: the control exposes the state to the bath")

print("\nwhere the rotation goes: with zero drift and g = 0 the state follows")
print("c1 (cos t |0> - i sin t |1>)|1> + c2 (cos t |1> - i sin t |0>)|0>,")
print("the rotation that leaves span{|01>, |10>} (moduli cos t, sin t).")
bare = qd.build_two_qubit(qd.ScenarioParams(omega0=0.0, omega_env=0.0, g=0.0))
xi0 = qd.dfs_state(bare, 0.6, 0.8)
tr = qd.propagate(bare, qd.PulseSchedule.constant(1.0, [1.0, 0, 0, 0]), xi0, dt_max=0.01)
t = tr.times[-1]
amp = tr.final_state.amplitudes
print(f"t={t:.2f}: amp(|01>)={amp[3]:.4f} (c1 cos t = {0.6*np.cos(t):.4f}), "
      f"amp(|11>)={amp[9]:.4f} (-i c1 sin t = {-1j*0.6*np.sin(t):.4f})")
