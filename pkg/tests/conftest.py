import numpy as np
import pytest


def fd_check(model, x, seed=0, step=1e-6):
    """Worst relative mismatch between backward() and central differences.

    Uses a random output cotangent so every output contributes; relative
    error is taken against max(|fd|, 1e-3) which gives the 1e-8 absolute
    floor the checks ask for once multiplied by the 1e-5 tolerance.
    """
    out, trace = model.forward(x)
    cot = np.random.default_rng(seed).standard_normal(out.shape)
    grads = model.backward(trace, cot)
    worst = 0.0
    for name, p in model.params.items():
        for i in range(p.size):
            old = p.flat[i]
            p.flat[i] = old + step
            fp = float(np.sum(model.forward(x)[0] * cot))
            p.flat[i] = old - step
            fm = float(np.sum(model.forward(x)[0] * cot))
            p.flat[i] = old
            fd = (fp - fm) / (2 * step)
            err = abs(fd - grads[name].flat[i])
            worst = max(worst, err / max(abs(fd), 1e-3))
    return worst


def jitter_params(model, seed, scale=0.3):
    rng = np.random.default_rng(seed)
    for p in model.params.values():
        p += scale * rng.standard_normal(p.shape)
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one (criterion, passed, detail) entry per acceptance check, printed at the end
ACCEPTANCE = []


def record_criterion(name, passed, detail):
    ACCEPTANCE.append((name, bool(passed), detail))
    assert passed, f"{name}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
