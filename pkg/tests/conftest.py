import numpy as np
import pytest
from scipy.spatial.transform import Rotation


@pytest.fixture
def rng():
    return np.random.default_rng(20240524)


def random_rotation(rng, max_deg=180.0):
    """Proper rotation with angle uniform in [0, max_deg] about a random axis."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = np.deg2rad(rng.uniform(0.0, max_deg))
    return Rotation.from_rotvec(axis * angle).as_matrix()


def non_coplanar(rng, n, scale=0.8):
    while True:
        P = rng.uniform(-scale, scale, (n, 3))
        sv = np.linalg.svd(np.hstack([P, np.ones((n, 1))]), compute_uv=False)
        if sv[-1] > 1e-2 * sv[0]:
            return P


def smooth_perturbation(P, amp=0.1):
    return P + amp * np.sin(3.0 * P[:, [1, 2, 0]])


def affine_normal_equations(P, Q, w=None):
    """Independent oracle: accumulate the weighted normal equations point by point, solve by LU."""
    n = len(P)
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    M = np.zeros((4, 4))
    B = np.zeros((3, 4))
    for i in range(n):
        pt = np.append(P[i], 1.0)
        M += w[i] * np.outer(pt, pt)
        B += w[i] * np.outer(Q[i], pt)
    return np.linalg.solve(M.T, B.T).T


def tps_qr_oracle(P, Q, lam, w=None):
    """Independent TPS solve: kernel built by explicit loops, system solved by QR."""
    n = len(P)
    K = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            r = np.sqrt(np.sum((P[i] - P[j]) ** 2))
            K[i, j] = 0.0 if r == 0 else r * r * np.log(r)
    reg = np.full(n, lam) if w is None else lam / np.maximum(np.asarray(w), 1e-8)
    K = K + np.diag(reg)
    L = np.hstack([P, np.ones((n, 1))])
    Psi = np.block([[K, L], [L.T, np.zeros((4, 4))]])
    Z = np.vstack([Q, np.zeros((4, 3))])
    Qm, Rm = np.linalg.qr(Psi)
    theta = np.linalg.solve(Rm, Qm.T @ Z)
    return theta[n:], theta[:n]  # A (4x3), V (n x 3)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
