import hashlib
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import sympy

from .errors import CacheError
from .modular import derived_forms_qexp
from .numerics import PrecisionContext
from .qseries import QExpansion
from .utils import cache_env_var

logger = logging.getLogger(__name__)

schema_version = 1  #: Version of the record layout, records of other versions are recomputed
record_extension = '.json'
expansion_labels = ('t2', 't50', 'E', 'f50', 'g50', 'F50', 'f')  #: Forms stored by cached_forms


def exact_string(value, ctx: PrecisionContext) -> str:
    """
    Exact rational string of a binary floating point number of the context.
    """
    man, exp = ctx.mp.mpf(value).man_exp
    return str(sympy.Integer(man) * sympy.Integer(2) ** exp)


@dataclass
class CacheRecord:
    """
    Serialized coefficients of one object together with the precision they were computed at.

    :ivar label: Name of the object, e.g. 'f50.qexp'.
    :ivar kind: 'exact' for rational coefficients, 'binary' for context numbers stored as exact dyadic rationals.
    :ivar truncation: Number of coefficients the object is known to.
    :ivar coefficients: Rational strings; complex numbers take two consecutive entries.
    :ivar working_bits: Precision of binary records, None for exact ones.
    :ivar offset: Power of q of the first coefficient of an expansion.
    :ivar weight: Modular weight of an expansion.
    :ivar schema_version: Layout version.
    :ivar digest: SHA-256 of all other fields.
    """
    label: str
    kind: str
    truncation: int
    coefficients: List[str]
    working_bits: Optional[int] = None
    offset: int = 0
    weight: Optional[int] = None
    schema_version: int = schema_version
    digest: str = field(default='', compare=False)

    def _payload(self) -> str:
        content = asdict(self)
        content.pop('digest')
        return json.dumps(content, sort_keys=True)

    def compute_digest(self) -> str:
        return hashlib.sha256(self._payload().encode('utf-8')).hexdigest()

    def seal(self) -> 'CacheRecord':
        self.digest = self.compute_digest()
        return self

    def is_valid(self) -> bool:
        return self.schema_version == schema_version and self.digest == self.compute_digest()

    def serves(self, truncation: int, working_bits: Optional[int] = None) -> bool:
        """
        True if the record holds at least the requested number of coefficients at no lower precision.
        """
        if self.truncation < truncation:
            return False
        if self.kind == 'binary':
            return working_bits is not None and self.working_bits >= working_bits
        return True

    @classmethod
    def from_expansion(cls, label: str, series: QExpansion) -> 'CacheRecord':
        return cls(label=label, kind='exact', truncation=series.precision, coefficients=[str(c) for c in
                   series.coefficients], offset=series.offset, weight=series.weight).seal()

    def to_expansion(self) -> QExpansion:
        if self.kind != 'exact':
            raise CacheError(f'{self.label} holds {self.kind} numbers, not an exact expansion')
        return QExpansion([sympy.Rational(c) for c in self.coefficients], self.offset, self.label.split('.')[0],
                          self.weight)

    @classmethod
    def from_numbers(cls, label: str, values: list, ctx: PrecisionContext) -> 'CacheRecord':
        coefficients = []
        for value in values:
            value = ctx.mp.mpc(value)
            coefficients += [exact_string(value.real, ctx), exact_string(value.imag, ctx)]
        return cls(label=label, kind='binary', truncation=len(values), coefficients=coefficients,
                   working_bits=ctx.working_bits).seal()

    def to_numbers(self, ctx: PrecisionContext) -> list:
        if self.kind != 'binary':
            raise CacheError(f'{self.label} holds {self.kind} coefficients, not context numbers')
        parts = [ctx.convert(sympy.Rational(c)) for c in self.coefficients]
        return [ctx.mp.mpc(re, im) for re, im in zip(parts[::2], parts[1::2])]


class CacheStore:
    """
    Directory of CacheRecord files. Without a directory the store computes every object and keeps nothing.

    :ivar directory: Cache directory, None when caching is disabled.
    """

    def __init__(self, directory: Optional[str] = None):
        directory = directory or os.environ.get(cache_env_var)
        if directory:
            directory = os.path.abspath(os.path.expanduser(directory))
            try:
                os.makedirs(directory, exist_ok=True)
            except OSError as e:
                raise CacheError(f'cannot create cache directory {directory}: {e}') from e
        self.directory = directory

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def path(self, label: str) -> str:
        return os.path.join(self.directory, label + record_extension)

    def read(self, label: str) -> Optional[CacheRecord]:
        """
        Loads a record; missing, unparsable or tampered records give None.
        """
        if not self.enabled or not os.path.exists(self.path(label)):
            return None
        path = self.path(label)
        try:
            with open(path, 'r', encoding='utf-8') as file:
                record = CacheRecord(**json.load(file))
        except (OSError, ValueError, TypeError) as e:
            logger.warning(f'Ignoring unreadable cache record {path}: {e}')
            return None
        if not record.is_valid():
            logger.warning(f'Ignoring cache record {path} with mismatching digest or schema')
            return None

        return record

    def write(self, record: CacheRecord):
        """
        Writes to a temporary file in the cache directory and renames it over the record.
        """
        if not self.enabled:
            return
        path = self.path(record.label)
        try:
            with tempfile.NamedTemporaryFile('w', encoding='utf-8', dir=self.directory, suffix='.tmp',
                                             delete=False) as file:
                json.dump(asdict(record), file, sort_keys=True)
                temporary = file.name
            os.replace(temporary, path)
        except OSError as e:
            raise CacheError(f'cannot write cache record {path}: {e}') from e
        logger.debug(f'Cached {record.label} ({record.truncation} coefficients) at {path}')

    def expansion(self, label: str, precision: int, compute: Callable[[], QExpansion]) -> QExpansion:
        """
        Cached q-expansion known to at least the given precision.
        """
        record = self.read(label)
        if record is not None and record.serves(precision):
            return record.to_expansion().truncate(precision)
        series = compute()
        self.write(CacheRecord.from_expansion(label, series))
        return series

    def numbers(self, label: str, count: int, ctx: PrecisionContext, compute: Callable[[], list]) -> list:
        """
        Cached list of context numbers computed at no lower working precision than ctx.
        """
        record = self.read(label)
        if record is not None and record.serves(count, ctx.working_bits):
            return record.to_numbers(ctx)[:count]
        values = compute()
        self.write(CacheRecord.from_numbers(label, values, ctx))
        return values


def cache_roundtrip(record: CacheRecord, store: CacheStore) -> bool:
    """
    Writes a record, reads it back and compares every field including the digest.
    """
    if not store.enabled:
        raise CacheError('cache round trip needs a cache directory')
    store.write(record)
    loaded = store.read(record.label)

    return loaded is not None and loaded == record and loaded.digest == record.digest


def cached_forms(store: CacheStore, precision: int) -> Dict[str, QExpansion]:
    """
    derived_forms_qexp through the cache; all forms are recomputed and rewritten if any record is missing or stale.
    """
    records = {name: store.read(f'{name}.qexp') for name in expansion_labels}
    if all(record is not None and record.serves(precision) for record in records.values()):
        logger.info(f'Loaded q-expansions to q^{precision - 1} from {store.directory}')
        return {name: record.to_expansion().truncate(precision) for name, record in records.items()}

    forms = derived_forms_qexp(precision)
    for name in expansion_labels:
        store.write(CacheRecord.from_expansion(f'{name}.qexp', forms[name]))

    return forms
