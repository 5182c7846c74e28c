#!/usr/bin/env python3
"""
Feature Extraction Engine
Maps an account and its posts to the 17 metadata/media/engagement features
"""
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from account_records import (AccountRecord, FeatureVector, LabeledExample, PostRecord,
                             SchemaError, UserClass)

logger = logging.getLogger(__name__)

# Captions at or below this trimmed length count as near-empty
NEAR_EMPTY_CAPTION_CHARS = 2

SECONDS_PER_HOUR = 3600.0

_TOKEN_SPLIT = re.compile(r'[\W_]+')
_TAG_SEPARATORS = re.compile(r'[#\-_ ]')


@dataclass
class KeywordConfig:
    """Hashtag phrase lists behind the pr/fo features"""
    promotional: Tuple[str, ...] = ('contest', 'repost', 'mention')
    follower_hunter: Tuple[str, ...] = ('follow', 'like', 'follow for follow')
    cs_include_hashtags: bool = False  # add hashtags to the cs token stream

    def __post_init__(self):
        self.promotional = tuple(self.promotional)
        self.follower_hunter = tuple(self.follower_hunter)
        for name in ('promotional', 'follower_hunter'):
            for phrase in getattr(self, name):
                if not phrase or not phrase.strip():
                    raise ValueError(f"{name}: phrases must be non-empty")
                if phrase != phrase.lower():
                    raise ValueError(f"{name}: phrase '{phrase}' must be lowercase")


def keyword_config_from_dict(config_dict: Dict) -> KeywordConfig:
    """Create a KeywordConfig from a dictionary, falling back to defaults"""
    defaults = KeywordConfig()
    return KeywordConfig(
        promotional=config_dict.get('promotional', defaults.promotional),
        follower_hunter=config_dict.get('follower_hunter', defaults.follower_hunter),
        cs_include_hashtags=bool(config_dict.get('cs_include_hashtags', defaults.cs_include_hashtags)),
    )


def load_keyword_config(path: str) -> KeywordConfig:
    with open(path, 'r', encoding='utf-8') as f:
        try:
            config_data = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid keyword config JSON ({e.msg})", line=e.lineno) from None
    if not isinstance(config_data, dict):
        raise SchemaError("keyword config must be a JSON object")
    try:
        return keyword_config_from_dict(config_data)
    except ValueError as e:
        raise SchemaError(str(e)) from None


def engagement_rates(posts: Sequence[PostRecord], followers: int) -> Tuple[float, float]:
    """
    Likes and comments per post per follower

    Returns:
        (erl, erc); both 0 when there are no posts or no followers
    """
    n_posts = len(posts)
    if n_posts == 0 or followers == 0:
        return 0.0, 0.0
    denominator = float(n_posts) * float(followers)
    likes = sum(p.likes for p in posts)
    comments = sum(p.comments for p in posts)
    return likes / denominator, comments / denominator


def normalize_tag(text: str) -> str:
    return _TAG_SEPARATORS.sub('', text.lower())


def keyword_rate(posts: Sequence[PostRecord], phrases: Sequence[str]) -> float:
    """
    Mean number of hashtags per post matching any phrase

    A hashtag matches when its normalized form contains a normalized phrase,
    so 'follow for follow' matches '#Follow_For_Follow' and 'follow' matches
    '#Follow4Follow'.
    """
    if not posts:
        return 0.0
    needles = [normalize_tag(p) for p in phrases]
    needles = [n for n in needles if n]
    total = 0
    for post in posts:
        for tag in post.hashtags:
            tag_norm = normalize_tag(tag)
            if any(needle in tag_norm for needle in needles):
                total += 1
    return total / len(posts)


def caption_stats(posts: Sequence[PostRecord]) -> Tuple[float, float]:
    """
    Returns:
        (cl, cz): mean caption length in characters and the fraction of
        near-empty captions
    """
    if not posts:
        return 0.0, 0.0
    lengths = [len(p.caption) for p in posts]
    near_empty = sum(1 for p in posts if len(p.caption.strip()) <= NEAR_EMPTY_CAPTION_CHARS)
    return sum(lengths) / len(posts), near_empty / len(posts)


def tokenize_caption(text: str) -> List[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def _post_tokens(post: PostRecord, include_hashtags: bool) -> List[str]:
    tokens = tokenize_caption(post.caption)
    if include_hashtags:
        for tag in post.hashtags:
            tokens.extend(tokenize_caption(tag))
    return tokens


def pairwise_cosine(posts: Sequence[PostRecord], include_hashtags: bool = False) -> float:
    """
    Mean cosine similarity of term-frequency vectors over all unordered post pairs

    Posts without tokens have a zero vector and contribute similarity 0 to
    each of their pairs. Fewer than two posts yields 0.
    """
    n = len(posts)
    if n < 2:
        return 0.0

    counts = [Counter(_post_tokens(p, include_hashtags)) for p in posts]
    vocabulary: Dict[str, int] = {}
    for counter in counts:
        for token in counter:
            vocabulary.setdefault(token, len(vocabulary))
    if not vocabulary:
        return 0.0

    tf = np.zeros((n, len(vocabulary)))
    for i, counter in enumerate(counts):
        for token, c in counter.items():
            tf[i, vocabulary[token]] = c

    norms = np.linalg.norm(tf, axis=1)
    nonzero = norms > 0
    unit = np.zeros_like(tf)
    unit[nonzero] = tf[nonzero] / norms[nonzero, np.newaxis]
    similarity = unit @ unit.T

    upper = similarity[np.triu_indices(n, k=1)]
    cs = float(upper.sum()) / (n * (n - 1) / 2)
    return min(max(cs, 0.0), 1.0)


def mean_interval_hours(posts: Sequence[PostRecord]) -> float:
    """Mean gap between consecutive posts in hours (posts sorted by posted_at)"""
    if len(posts) < 2:
        return 0.0
    stamps = np.array([p.posted_at for p in posts], dtype=float)
    return float(np.mean(np.diff(stamps))) / SECONDS_PER_HOUR


def extract_features(account: AccountRecord, keywords: Optional[KeywordConfig] = None) -> FeatureVector:
    """
    Compute the 17 features of one validated account

    Args:
        account: Validated AccountRecord (posts sorted)
        keywords: Phrase lists for pr/fo (defaults when None)

    Returns:
        FeatureVector; every post-derived feature is 0 for accounts without posts
    """
    keywords = keywords or KeywordConfig()
    posts = account.posts
    n_posts = len(posts)

    erl, erc = engagement_rates(posts, account.followers)
    cl, cz = caption_stats(posts)
    if n_posts:
        ni = sum(1 for p in posts if not p.has_image) / n_posts
        lt = sum(1 for p in posts if p.location_tagged) / n_posts
        hc = sum(len(p.hashtags) for p in posts) / n_posts
    else:
        ni = lt = hc = 0.0

    return FeatureVector(
        pos=float(n_posts),
        flw=float(account.followers),
        flg=float(account.following),
        bl=float(len(account.biography)),
        pic=1.0 if account.has_profile_picture else 0.0,
        lin=1.0 if account.has_external_link else 0.0,
        cl=cl,
        cz=cz,
        ni=ni,
        erl=erl,
        erc=erc,
        lt=lt,
        hc=hc,
        pr=keyword_rate(posts, keywords.promotional),
        fo=keyword_rate(posts, keywords.follower_hunter),
        cs=pairwise_cosine(posts, keywords.cs_include_hashtags),
        pi=mean_interval_hours(posts),
    )


def extract_batch(accounts: Sequence[AccountRecord], keywords: Optional[KeywordConfig] = None,
                  n_jobs: int = 1) -> List[FeatureVector]:
    """Extract features for many accounts; output order follows input order"""
    keywords = keywords or KeywordConfig()
    if n_jobs == 1:
        return [extract_features(a, keywords) for a in accounts]
    return Parallel(n_jobs=n_jobs)(delayed(extract_features)(a, keywords) for a in accounts)


def label_examples(accounts: Sequence[AccountRecord], labels: Mapping[str, UserClass],
                   keywords: Optional[KeywordConfig] = None, n_jobs: int = 1) -> List[LabeledExample]:
    """
    Extract features and attach labels

    Raises:
        SchemaError: an account has no label
    """
    missing = [a.account_id for a in accounts if a.account_id not in labels]
    if missing:
        shown = ', '.join(missing[:5]) + (' ...' if len(missing) > 5 else '')
        raise SchemaError(f"{len(missing)} accounts have no label: {shown}", field='label')

    vectors = extract_batch(accounts, keywords, n_jobs)
    logger.info("Extracted features for %d accounts", len(vectors))
    return [LabeledExample(v, labels[a.account_id], a.account_id) for a, v in zip(accounts, vectors)]
