import json

import pytest
import sympy

from fiberperiods import cache
from fiberperiods.cache import CacheRecord, CacheStore, cache_roundtrip, cached_forms
from fiberperiods.errors import CacheError
from fiberperiods.modular import hauptmodul_qexp
from fiberperiods.numerics import PrecisionContext
from fiberperiods.qseries import QExpansion


@pytest.fixture
def store(tmp_path):
    return CacheStore(str(tmp_path / 'cache'))


def test_expansion_roundtrip(store):
    record = CacheRecord.from_expansion('h50.qexp', hauptmodul_qexp('h50', 64))
    assert cache_roundtrip(record, store)
    loaded = store.read('h50.qexp').to_expansion()
    assert loaded.offset == -1
    assert loaded.coefficients == hauptmodul_qexp('h50', 64).coefficients


def test_binary_numbers_are_bit_exact(store):
    ctx = PrecisionContext.minimal(30)
    values = [ctx.pi, ctx.mp.mpc(ctx.sqrt2, -ctx.zeta3), ctx.mp.mpf(0)]
    record = CacheRecord.from_numbers('sample.values', values, ctx)
    assert cache_roundtrip(record, store)
    loaded = store.read('sample.values').to_numbers(ctx)
    assert loaded[0].real == ctx.pi and loaded[0].imag == 0
    assert loaded[1] == ctx.mp.mpc(ctx.sqrt2, -ctx.zeta3)
    assert loaded[2] == 0


def test_corrupted_record_is_recomputed(store):
    series = QExpansion([1, 2, 3], label='sample', weight=2)
    store.write(CacheRecord.from_expansion('sample.qexp', series))

    path = store.path('sample.qexp')
    with open(path) as file:
        content = json.load(file)
    content['coefficients'][1] = '5'
    with open(path, 'w') as file:
        json.dump(content, file)
    assert store.read('sample.qexp') is None

    calls = []

    def compute():
        calls.append(1)
        return series

    assert store.expansion('sample.qexp', 3, compute).coefficients == [1, 2, 3]
    assert calls == [1]
    assert store.read('sample.qexp').coefficients == ['1', '2', '3']


def test_lower_precision_record_is_not_served(store):
    low, high = PrecisionContext.minimal(20), PrecisionContext.minimal(60)
    store.write(CacheRecord.from_numbers('sample.values', [low.pi], low))

    calls = []

    def compute():
        calls.append(1)
        return [high.pi]

    assert store.numbers('sample.values', 1, high, compute)[0] == high.pi
    assert calls == [1]
    assert store.read('sample.values').working_bits == high.working_bits
    assert abs(store.numbers('sample.values', 1, low, compute)[0] - low.pi) < low.tolerance(0)
    assert calls == [1]


def test_short_expansion_is_not_served(store):
    store.write(CacheRecord.from_expansion('sample.qexp', QExpansion([1, 2])))
    longer = QExpansion([1, 2, 3, 4])
    assert store.expansion('sample.qexp', 4, lambda: longer).coefficients == [1, 2, 3, 4]


def test_schema_version_mismatch(store):
    record = CacheRecord.from_expansion('sample.qexp', QExpansion([1]))
    record.schema_version = cache.schema_version + 1
    store.write(record.seal())
    assert store.read('sample.qexp') is None


def test_disabled_store(monkeypatch):
    monkeypatch.delenv(cache.cache_env_var, raising=False)
    store = CacheStore()
    assert not store.enabled
    assert store.expansion('sample.qexp', 1, lambda: QExpansion([7])).coefficients == [7]
    with pytest.raises(CacheError):
        cache_roundtrip(CacheRecord.from_expansion('sample.qexp', QExpansion([1])), store)


def test_environment_directory(monkeypatch, tmp_path):
    monkeypatch.setenv(cache.cache_env_var, str(tmp_path / 'env'))
    assert CacheStore().directory == str(tmp_path / 'env')


def test_cached_forms_load_without_recomputing(store, monkeypatch):
    forms = cached_forms(store, 40)

    def fail(precision):
        raise AssertionError('recomputed')

    monkeypatch.setattr(cache, 'derived_forms_qexp', fail)
    loaded = cached_forms(store, 36)
    assert loaded['f'].coefficients == forms['f'].truncate(36).coefficients
    assert loaded['g50'].weight == 4
    assert loaded['t50'].coefficient(-1) == sympy.Rational(1, 5)
