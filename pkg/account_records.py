#!/usr/bin/env python3
"""
Account Records
Raw account/post types, the 17-feature vector, and flat-file loaders/writers
"""
import json
import logging
import math
from dataclasses import dataclass, fields
from enum import Enum, IntEnum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FEATURE_NAMES: Tuple[str, ...] = (
    'pos', 'flw', 'flg', 'bl', 'pic', 'lin',
    'cl', 'cz', 'ni', 'erl', 'erc', 'lt', 'hc', 'pr', 'fo', 'cs', 'pi',
)

# Profile metadata, available even for private accounts
METADATA_FEATURES: Tuple[str, ...] = ('pos', 'flw', 'flg', 'bl', 'pic', 'lin')

FEATURE_SETS: Dict[str, Tuple[str, ...]] = {
    'all': FEATURE_NAMES,
    'metadata': METADATA_FEATURES,
}

FEATURE_CSV_HEADER: Tuple[str, ...] = ('account_id',) + FEATURE_NAMES + ('label',)


class SchemaError(ValueError):
    """Input record or file does not match the documented schema"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.reason = message
        self.line = line
        self.field = field
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"field '{field}'")
        prefix = f"{', '.join(parts)}: " if parts else ''
        super().__init__(f"{prefix}{message}")


class DuplicateAccountError(SchemaError):
    pass


class UserClass(IntEnum):
    """Behavioral account classes, in canonical index order"""
    AUTHENTIC = 0
    ACTIVE_FAKE = 1
    INACTIVE_FAKE = 2
    SPAMMER = 3

    @property
    def token(self) -> str:
        return self.name.lower()

    @property
    def is_fake(self) -> bool:
        return self is not UserClass.AUTHENTIC

    def binary(self) -> int:
        """Real(0) / Fake(1) projection"""
        return int(self.is_fake)

    @classmethod
    def from_token(cls, token: str) -> 'UserClass':
        try:
            return cls[token.strip().upper()]
        except KeyError:
            valid = ', '.join(c.token for c in cls)
            raise ValueError(f"unknown label '{token}' (expected one of: {valid})") from None


class Scheme(Enum):
    TWO_CLASS = 'two_class'
    FOUR_CLASS = 'four_class'

    @property
    def labels(self) -> Tuple[str, ...]:
        if self is Scheme.TWO_CLASS:
            return ('real', 'fake')
        return tuple(c.token for c in UserClass)

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    def project(self, user_class: UserClass) -> int:
        """Class index of a label under this scheme"""
        if self is Scheme.TWO_CLASS:
            return user_class.binary()
        return int(user_class)

    @classmethod
    def parse(cls, value: str) -> 'Scheme':
        aliases = {'2': cls.TWO_CLASS, 'two_class': cls.TWO_CLASS,
                   '4': cls.FOUR_CLASS, 'four_class': cls.FOUR_CLASS}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ValueError(f"unknown scheme '{value}' (expected 2 or 4)") from None


@dataclass(frozen=True)
class PostRecord:
    """One post with the raw inputs behind the media/engagement features"""
    caption: str
    hashtags: Tuple[str, ...]
    likes: int
    comments: int
    has_image: bool
    location_tagged: bool
    posted_at: int  # UTC epoch seconds

    def __post_init__(self):
        if self.likes < 0:
            raise SchemaError(f"must be >= 0, got {self.likes}", field='likes')
        if self.comments < 0:
            raise SchemaError(f"must be >= 0, got {self.comments}", field='comments')
        for tag in self.hashtags:
            if not tag.strip():
                raise SchemaError("hashtags must not contain blank entries", field='hashtags')

    @classmethod
    def from_dict(cls, data: Dict) -> 'PostRecord':
        hashtags = _require(data, 'hashtags', list, 'post')
        for tag in hashtags:
            if not isinstance(tag, str):
                raise SchemaError("hashtags must be strings", field='hashtags')
        return cls(
            caption=_require(data, 'caption', str, 'post'),
            hashtags=tuple(tag.lstrip('#') for tag in hashtags),
            likes=_require_count(data, 'likes'),
            comments=_require_count(data, 'comments'),
            has_image=_require(data, 'has_image', bool, 'post'),
            location_tagged=_require(data, 'location_tagged', bool, 'post'),
            posted_at=_require_int(data, 'posted_at'),
        )

    def to_dict(self) -> Dict:
        return {
            'caption': self.caption,
            'hashtags': list(self.hashtags),
            'likes': self.likes,
            'comments': self.comments,
            'has_image': self.has_image,
            'location_tagged': self.location_tagged,
            'posted_at': self.posted_at,
        }


@dataclass(frozen=True)
class AccountRecord:
    """Profile metadata plus posts; posts are kept sorted by posted_at"""
    account_id: str
    followers: int
    following: int
    biography: str
    has_profile_picture: bool
    has_external_link: bool
    posts: Tuple[PostRecord, ...] = ()

    def __post_init__(self):
        if not self.account_id.strip():
            raise SchemaError("must be non-empty", field='account_id')
        if self.followers < 0:
            raise SchemaError(f"must be >= 0, got {self.followers}", field='followers')
        if self.following < 0:
            raise SchemaError(f"must be >= 0, got {self.following}", field='following')
        ordered = tuple(sorted(self.posts, key=lambda p: p.posted_at))
        if ordered != tuple(self.posts):
            object.__setattr__(self, 'posts', ordered)

    @classmethod
    def from_dict(cls, data: Dict) -> 'AccountRecord':
        if not isinstance(data, dict):
            raise SchemaError("expected a JSON object")
        raw_posts = _require(data, 'posts', list, 'account')
        posts = []
        for i, raw in enumerate(raw_posts):
            if not isinstance(raw, dict):
                raise SchemaError("expected a JSON object", field=f'posts[{i}]')
            try:
                posts.append(PostRecord.from_dict(raw))
            except SchemaError as e:
                raise SchemaError(e.reason, field=f"posts[{i}].{e.field}" if e.field else f"posts[{i}]") from None
        return cls(
            account_id=_require(data, 'account_id', str, 'account'),
            followers=_require_count(data, 'followers'),
            following=_require_count(data, 'following'),
            biography=_require(data, 'biography', str, 'account'),
            has_profile_picture=_require(data, 'has_profile_picture', bool, 'account'),
            has_external_link=_require(data, 'has_external_link', bool, 'account'),
            posts=tuple(posts),
        )

    def to_dict(self) -> Dict:
        return {
            'account_id': self.account_id,
            'followers': self.followers,
            'following': self.following,
            'biography': self.biography,
            'has_profile_picture': self.has_profile_picture,
            'has_external_link': self.has_external_link,
            'posts': [p.to_dict() for p in self.posts],
        }


@dataclass(frozen=True)
class FeatureVector:
    """The 17 account features in canonical order"""
    pos: float = 0.0
    flw: float = 0.0
    flg: float = 0.0
    bl: float = 0.0
    pic: float = 0.0
    lin: float = 0.0
    cl: float = 0.0
    cz: float = 0.0
    ni: float = 0.0
    erl: float = 0.0
    erc: float = 0.0
    lt: float = 0.0
    hc: float = 0.0
    pr: float = 0.0
    fo: float = 0.0
    cs: float = 0.0
    pi: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> 'FeatureVector':
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {len(values)}")
        return cls(**{name: float(v) for name, v in zip(FEATURE_NAMES, values)})


assert tuple(f.name for f in fields(FeatureVector)) == FEATURE_NAMES


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    label: UserClass
    account_id: str

    def __post_init__(self):
        values = self.features.as_array()
        if not np.all(np.isfinite(values)):
            bad = [n for n, v in zip(FEATURE_NAMES, values) if not math.isfinite(v)]
            raise SchemaError(f"non-finite feature values: {', '.join(bad)}", field='features')


def _require(data: Dict, key: str, kind: type, what: str):
    if key not in data:
        raise SchemaError(f"missing from {what}", field=key)
    value = data[key]
    # bool is an int subclass; keep the two apart
    if kind is not bool and isinstance(value, bool) or not isinstance(value, kind):
        raise SchemaError(f"expected {kind.__name__}, got {type(value).__name__}", field=key)
    return value


def _require_int(data: Dict, key: str) -> int:
    value = data.get(key)
    if key not in data:
        raise SchemaError("missing", field=key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected integer, got {value!r}", field=key)
    return value


def _require_count(data: Dict, key: str) -> int:
    value = _require_int(data, key)
    if value < 0:
        raise SchemaError(f"must be >= 0, got {value}", field=key)
    return value


def load_accounts_jsonl(path: str) -> List[AccountRecord]:
    """
    Load and validate an accounts JSONL file

    Args:
        path: File with one account JSON object per line

    Returns:
        Validated records in file order

    Raises:
        SchemaError: malformed line, invalid field or duplicate account_id
    """
    accounts = []
    seen: Dict[str, int] = {}
    with open(path, 'rb') as f:
        for line_no, raw in enumerate(f, start=1):
            try:
                line = raw.decode('utf-8')
            except UnicodeDecodeError as e:
                raise SchemaError(f"invalid UTF-8 (byte {e.start})", line=line_no) from None
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"invalid JSON ({e.msg})", line=line_no) from None
            try:
                account = AccountRecord.from_dict(data)
            except SchemaError as e:
                raise SchemaError(e.reason, line=line_no, field=e.field) from None
            if account.account_id in seen:
                raise DuplicateAccountError(
                    f"duplicate account_id '{account.account_id}' (first seen on line {seen[account.account_id]})",
                    line=line_no, field='account_id')
            seen[account.account_id] = line_no
            accounts.append(account)

    logger.info("Loaded %d accounts from %s", len(accounts), path)
    return accounts


def write_accounts_jsonl(accounts: Sequence[AccountRecord], path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        for account in accounts:
            f.write(json.dumps(account.to_dict(), ensure_ascii=False))
            f.write('\n')


def load_labels_csv(path: str) -> Dict[str, UserClass]:
    """Read an `account_id,label` sidecar file into a mapping"""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(df.columns) != ['account_id', 'label']:
        raise SchemaError(f"expected header 'account_id,label', got '{','.join(df.columns)}'", line=1)

    labels: Dict[str, UserClass] = {}
    for row_no, (account_id, token) in enumerate(zip(df['account_id'], df['label']), start=1):
        try:
            label = UserClass.from_token(token)
        except ValueError as e:
            raise SchemaError(f"row {row_no}: {e}", line=row_no + 1, field='label') from None
        if account_id in labels:
            raise DuplicateAccountError(f"row {row_no}: duplicate account_id '{account_id}'",
                                        line=row_no + 1, field='account_id')
        labels[account_id] = label
    return labels


def write_labels_csv(labels: Sequence[Tuple[str, UserClass]], path: str) -> None:
    df = pd.DataFrame({
        'account_id': [account_id for account_id, _ in labels],
        'label': [label.token for _, label in labels],
    }, columns=['account_id', 'label'])
    df.to_csv(path, index=False, lineterminator='\n')


def load_feature_csv(path: str) -> List[LabeledExample]:
    """
    Load pre-extracted features

    Args:
        path: CSV whose header is exactly FEATURE_CSV_HEADER

    Returns:
        One LabeledExample per data row

    Raises:
        SchemaError: header mismatch, non-numeric cell or unknown label
    """
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    header = list(df.columns)
    if header != list(FEATURE_CSV_HEADER):
        missing = [c for c in FEATURE_CSV_HEADER if c not in header]
        extra = [c for c in header if c not in FEATURE_CSV_HEADER]
        detail = []
        if missing:
            detail.append(f"missing columns: {', '.join(missing)}")
        if extra:
            detail.append(f"unexpected columns: {', '.join(extra)}")
        if not detail:
            detail.append("columns out of order")
        raise SchemaError(f"header mismatch ({'; '.join(detail)})", line=1)

    values = np.empty((len(df), len(FEATURE_NAMES)), dtype=float)
    for j, name in enumerate(FEATURE_NAMES):
        column = pd.to_numeric(df[name], errors='coerce')
        bad = column.isna().to_numpy()
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise SchemaError(f"row {row + 1}: non-numeric value {df[name].iloc[row]!r}",
                              line=row + 2, field=name)
        values[:, j] = column.to_numpy(dtype=float)

    examples = []
    for row, (account_id, token) in enumerate(zip(df['account_id'], df['label'])):
        try:
            label = UserClass.from_token(token)
        except ValueError as e:
            raise SchemaError(f"row {row + 1}: {e}", line=row + 2, field='label') from None
        try:
            examples.append(LabeledExample(FeatureVector.from_array(values[row]), label, account_id))
        except SchemaError as e:
            raise SchemaError(f"row {row + 1}: {e.reason}", line=row + 2, field=e.field) from None

    logger.info("Loaded %d feature rows from %s", len(examples), path)
    return examples


def write_feature_csv(examples: Sequence[LabeledExample], path: str) -> None:
    """Write examples with every feature at 6 decimal places"""
    rows = [[ex.account_id] + [f"{v:.6f}" for v in ex.features.as_array()] + [ex.label.token]
            for ex in examples]
    df = pd.DataFrame(rows, columns=list(FEATURE_CSV_HEADER))
    df.to_csv(path, index=False, lineterminator='\n')


def examples_to_matrix(examples: Sequence[LabeledExample], scheme: Scheme,
                       feature_set: str = 'all') -> Tuple[np.ndarray, np.ndarray]:
    """
    Stack examples into a feature matrix and scheme-projected label vector

    Args:
        examples: Labeled examples
        scheme: Label scheme used for projection
        feature_set: Name in FEATURE_SETS selecting the columns

    Returns:
        (X, y) with X of shape (n, d) and integer class indices y
    """
    columns = feature_columns(feature_set)
    if examples:
        X = np.vstack([ex.features.as_array() for ex in examples])[:, columns]
    else:
        X = np.empty((0, len(columns)))
    y = np.array([scheme.project(ex.label) for ex in examples], dtype=int)
    return X, y


def feature_columns(feature_set: str) -> List[int]:
    try:
        names = FEATURE_SETS[feature_set]
    except KeyError:
        raise ValueError(f"unknown feature set '{feature_set}' (expected one of: {', '.join(FEATURE_SETS)})") from None
    return [FEATURE_NAMES.index(name) for name in names]
