import pytest

from src.cli import default_slice, original_symbols
from src.emscr import build_emscr
from src.field import make_field, subgroup_of_order
from src.mscr import build_mscr
from src.repair import cooperative_repair, reader_from_symbols
from src.scalarcode import build_rs

SEED = 7
GROUPS = 4


@pytest.fixture(scope="session")
def gf4096():
    return make_field(poly=0x1009)


@pytest.fixture(scope="session")
def b0_63(gf4096):
    return subgroup_of_order(gf4096, 63)


@pytest.fixture(scope="session")
def inner7(gf4096, b0_63):
    return build_mscr(7, 2, gf4096, b0_63)


@pytest.fixture(scope="session")
def rs772():
    return build_rs(7, 7, 2)


@pytest.fixture(scope="session")
def params(inner7, rs772, gf4096, b0_63):
    """The (M=49, N=7, r=5) code over GF(2^12)."""
    return build_emscr(inner7, rs772, gf4096, b0_63)


@pytest.fixture(scope="session")
def gf19():
    return make_field(prime=19)


@pytest.fixture(scope="session")
def small_inner(gf19):
    """(n=4, k=2) inner code: m=6, l=729, B0 of order 9."""
    return build_mscr(4, 2, gf19, subgroup_of_order(gf19, 9))


@pytest.fixture(scope="session")
def params_odd():
    """The same (49, 7, 5) code over GF(4019), with B0 of order 49."""
    gf = make_field(prime=4019)
    b0 = subgroup_of_order(gf, 49)
    return build_emscr(build_mscr(7, 2, gf, b0), build_rs(7, 7, 2), gf, b0)


class RepairRun:
    def __init__(self, params, failed, groups=GROUPS, seed=SEED, subset_seed=None, n_jobs=1):
        self.failed = failed
        self.slice = default_slice(params, failed, groups, seed)
        nodes = list(range(1, params.M + 1))
        self.symbols = original_symbols(params, seed, self.slice, nodes)
        helpers = {i: s for i, s in self.symbols.items() if i not in failed}
        self.shards, self.transcript = cooperative_repair(
            params, failed, self.slice, reader_from_symbols(params.field, helpers),
            subset_seed=subset_seed, n_jobs=n_jobs,
        )


@pytest.fixture(scope="session")
def run_distinct(params):
    """Nodes 1 (zero codeword) and 8 (constant 1) differ in every block."""
    return RepairRun(params, (1, 8))


@pytest.fixture(scope="session")
def run_mixed(params):
    """Nodes 1 and 2 share their symbol in block 1 only."""
    return RepairRun(params, (1, 2))
