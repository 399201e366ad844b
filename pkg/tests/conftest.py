import math

import pytest

from spininterp.model import Domain, MixtureSpec, pure_p_spec, sk_spec


@pytest.fixture(scope="session")
def sk():
    return sk_spec()


@pytest.fixture(scope="session")
def pure3():
    return pure_p_spec(3)


@pytest.fixture(scope="session")
def mixed23():
    """gamma_2 > 0 mixture with a cubic component."""
    return MixtureSpec(gammas=(0.6, 0.35), domain=Domain.HYPERCUBE)


@pytest.fixture(scope="session")
def sk_sphere():
    return MixtureSpec(gammas=(1.0 / math.sqrt(2.0),), domain=Domain.SPHERE)


@pytest.fixture()
def sk_toml(tmp_path):
    path = tmp_path / "sk.toml"
    path.write_text(f'domain = "hypercube"\ngammas = [{1.0 / math.sqrt(2.0)!r}]\n')
    return str(path)
