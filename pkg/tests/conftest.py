import pytest

from delearn import verification


@pytest.fixture(scope="session")
def ctx():
    """Shared verification context: expensive experiment runs are built once
    and reused by the acceptance gate and the network property suite."""
    return verification.VerificationContext()
