"""Carter quantization: family operators commute, a tampered one does not.

Run:  python3 demos/quantize_and_commute.py
"""

import numpy as np

from benenti import (
    MetricField,
    QuantizedOperator,
    commutator_apply,
    commutator_decompose,
    get_entry,
    killing_operator,
    laplace_apply,
    laplacian,
)

pair = get_entry("dini").pair
point = (1.8, 0.6)

# Two members of the quantized family and a second-order Laplacian check.
op_a = killing_operator(pair, 0.0)
op_b = killing_operator(pair, 3.0)
print("commutators of family operators on test functions at", point)
for f in ("x^2 * y", "sin(x) + cos(y)", "exp(x - y)"):
    value = commutator_apply(op_a, op_b, f, point)
    print(f"  [K_0, K_3] {f!r:20s} = {value:+.3e}")

# The flat Laplacian reproduces textbook values.
flat = MetricField(("x", "y"), [["1", "0"], ["0", "1"]])
print("\nflat laplacian of x^2 + y^2:",
      laplace_apply(flat, "x^2 + y^2", (0.3, -0.8)).value)

# Tampering with the coefficient tensor breaks commutation.  K = diag(x, 0)
# is not a Killing tensor for the flat metric; the commutator with the
# Laplacian is the third-derivative operator 2 d^3/dx^3.
bad = QuantizedOperator.from_expressions(
    flat, [["x", "0"], ["0", "0"]], name="non-killing"
)
lap = laplacian(flat)
print("\n[Laplacian, K_hat] for the non-Killing K = diag(x, 0):")
for f in ("x^2", "x^3", "exp(x)"):
    value = commutator_apply(lap, bad, f, (1.0, 0.5))
    print(f"  f = {f!r:8s} -> {value:+.6f}")
print("x^2 sits in the kernel of d^3/dx^3; x^3 gives exactly 2 * 3! = 12")

# The decomposition separates the residual operator into a second-order
# part Q and a first-order part V.  For K = diag(x^2, 0) the commutator
# is 4x d^3/dx^3 + 6 d^2/dx^2, so Q picks up the constant 6.
worse = QuantizedOperator.from_expressions(
    flat, [["x^2", "0"], ["0", "0"]], name="quadratic-non-killing"
)
dec = commutator_decompose(lap, worse, (1.0, 0.5))
print("\ndecomposition of [Laplacian, K_hat] for K = diag(x^2, 0):")
print("  Q =", np.array_str(dec.Q, precision=4, suppress_small=True).replace("\n", " "))
print("  V =", dec.V)
print("  cubic residual:", f"{dec.cubic_residual:.3f}  (the 4x d^3/dx^3 part)")

# On the genuine family the same decomposition collapses to zero.
dec0 = commutator_decompose(op_a, op_b, point)
print("\nsame decomposition for the Dini family operators:")
print(f"  |Q| = {dec0.q_norm:.3e}  |V| = {dec0.v_norm:.3e}  "
      f"cubic = {dec0.cubic_residual:.3e}")
