import pytest

from sfwg import _backend


@pytest.fixture(params=["compiled", "fallback"])
def kernels(request):
    if request.param == "compiled":
        if not _backend.COMPILED:
            pytest.skip("compiled extension not built")
        from sfwg import _kernels
        return _kernels
    return _backend.fallback
