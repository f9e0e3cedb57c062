# The reverse-mode tensor core
#
# Everything trainable in this package runs on one small autodiff
# module: float64 tensors, a handful of matrix ops, and a topological
# backward pass. This script builds a tiny computation, checks its
# gradients against finite differences, and fits a least-squares line
# with gradient descent.

import numpy as np

from trajrep import ParamStore, grad_check
from trajrep import tensor as T

# Forward graphs are built from explicit ops; backward() fills .grad.
a = T.Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]), requires_grad=True)
b = T.Tensor(np.array([[0.5], [-1.0]]), requires_grad=True)
loss = T.sum_all(T.relu(T.matmul(a, b)))
T.backward(loss)
print("loss =", loss.item())
print("d loss / d a =\n", a.grad)
print("d loss / d b =\n", b.grad)

# grad_check probes every parameter entry with central differences.
store = ParamStore()
w = store.add("w", np.array([[0.3, -0.2], [0.1, 0.4]]))
v = store.add("v", np.array([[1.0], [2.0]]))


def tiny_loss():
    h = T.relu(T.matmul(w, v))
    return T.mean_all(T.mul(h, h))


report = grad_check(tiny_loss, store, h=1e-6)
print(f"\ngrad check: {report.n_checked} entries, "
      f"max rel error {report.max_rel_error:.2e}")

# A linear regression fitted with the same machinery end to end.
rng = np.random.default_rng(0)
X = rng.normal(size=(64, 3))
true_w = np.array([[2.0], [-1.0], [0.5]])
y = X @ true_w + 0.01 * rng.normal(size=(64, 1))

params = ParamStore()
w_hat = params.add("w_hat", np.zeros((3, 1)))
for step in range(200):
    pred = T.matmul(T.Tensor(X), w_hat)
    err = T.sub(pred, T.Tensor(y))
    mse = T.mean_all(T.mul(err, err))
    T.backward(mse)
    w_hat.data -= 0.1 * w_hat.grad
    params.zero_grads()
    if step % 50 == 0:
        print(f"step {step:3d}  mse {mse.item():.6f}")

print("\nrecovered weights:", np.round(w_hat.data.ravel(), 3))
print("true weights:     ", true_w.ravel())
