import numpy as np
import pytest

from thermodual.models import ThermoSystem
from thermodual.operators import Observable, PauliString

# independent dense builder used as the oracle for Pauli algebra checks
I2 = np.eye(2, dtype=complex)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMAS = (I2, X2, Y2, Z2)


def dense_word(letters, phase=1.0):
    out = np.array([[phase]], dtype=complex)
    for l in letters:
        out = np.kron(out, SIGMAS[l])
    return out


def random_density(rng, dim):
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = raw @ raw.conj().T
    return rho / np.trace(rho).real


def random_pauli_observable(rng, n, terms):
    entries = []
    for _ in range(terms):
        letters = tuple(int(v) for v in rng.integers(0, 4, size=n))
        entries.append((float(rng.uniform(-1, 1)), PauliString(letters)))
    return Observable(n, entries)


def random_system(rng, n=3, n_charges=3, hamiltonian_terms=6):
    hamiltonian = random_pauli_observable(rng, n, hamiltonian_terms)
    charges = tuple(
        random_pauli_observable(rng, n, int(rng.integers(2, 5)))
        for _ in range(n_charges)
    )
    targets = tuple(float(t) for t in rng.uniform(-0.3, 0.3, size=n_charges))
    return ThermoSystem(hamiltonian, charges, targets, label="random-test")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
