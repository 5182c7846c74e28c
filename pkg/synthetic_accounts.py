#!/usr/bin/env python3
"""
Synthetic Account Generator
Produces labeled account datasets whose per-class behavior follows the
observed separations between authentic users, active/inactive fakes and spammers
"""
import hashlib
import logging
import math
import os
from dataclasses import dataclass, fields
from typing import List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.special import expit

from account_records import (AccountRecord, PostRecord, UserClass, write_accounts_jsonl,
                             write_labels_csv)

logger = logging.getLogger(__name__)

ACCOUNTS_FILENAME = 'accounts.jsonl'
LABELS_FILENAME = 'labels.csv'

BASE_EPOCH = 1_577_836_800  # 2020-01-01T00:00:00Z
START_WINDOW_SECONDS = 365 * 24 * 3600
MAX_BIO_CHARS = 150
CHARS_PER_TOKEN = 7.0
TEMPLATE_SIZE = 8

WORD_POOL: Tuple[str, ...] = (
    'morning', 'coffee', 'sunset', 'beach', 'travel', 'city', 'lights', 'weekend', 'family',
    'friends', 'dinner', 'lunch', 'breakfast', 'garden', 'flowers', 'spring', 'summer',
    'autumn', 'winter', 'snow', 'rain', 'cloud', 'river', 'mountain', 'forest', 'trail',
    'hike', 'run', 'gym', 'workout', 'yoga', 'music', 'concert', 'guitar', 'piano', 'song',
    'dance', 'party', 'birthday', 'wedding', 'baby', 'puppy', 'kitten', 'cat', 'dog', 'horse',
    'book', 'reading', 'library', 'school', 'class', 'exam', 'office', 'meeting', 'project',
    'design', 'sketch', 'paint', 'canvas', 'gallery', 'museum', 'history', 'castle', 'bridge',
    'street', 'market', 'bakery', 'bread', 'cake', 'pizza', 'pasta', 'salad', 'soup', 'tea',
    'juice', 'smoothie', 'recipe', 'kitchen', 'home', 'room', 'window', 'balcony', 'view',
    'sky', 'moon', 'stars', 'night', 'evening', 'road', 'trip', 'car', 'bike', 'train',
    'plane', 'airport', 'hotel', 'island', 'ocean', 'wave', 'surf', 'sand', 'shell', 'boat',
    'lake', 'camp', 'fire', 'tent', 'picnic', 'park', 'tree', 'leaf', 'bird', 'butterfly',
    'bee', 'honey', 'farm', 'harvest', 'apple', 'orange', 'lemon', 'berry', 'cherry', 'peach',
    'mango', 'banana', 'grape', 'wine', 'cheese', 'chocolate', 'cookie', 'donut', 'candy',
    'vintage', 'fashion', 'style', 'dress', 'shoes', 'hat', 'jacket', 'scarf', 'watch',
    'camera', 'photo', 'film', 'movie', 'cinema', 'theater', 'stage', 'actor', 'artist',
    'poem', 'story', 'journal', 'diary', 'memory', 'dream', 'hope', 'smile', 'laugh', 'joy',
    'peace', 'calm', 'quiet', 'slow', 'sunday', 'monday', 'friday', 'holiday', 'vacation',
    'adventure', 'explore', 'wander', 'discover', 'local', 'neighborhood', 'village',
    'valley', 'desert', 'canyon', 'cliff', 'cave', 'waterfall', 'glacier', 'volcano',
    'sunrise', 'dawn', 'dusk', 'twilight', 'golden', 'blue', 'green', 'red', 'purple',
    'yellow', 'silver', 'bright', 'warm', 'cold', 'fresh', 'sweet', 'spicy', 'crispy',
    'homemade', 'handmade', 'craft', 'pottery', 'knitting', 'sewing', 'woodwork', 'tools',
    'studio', 'desk', 'laptop', 'notebook', 'pencil', 'marker', 'ink', 'paper', 'letter',
    'postcard', 'stamp', 'map', 'compass', 'ticket', 'passport', 'luggage', 'suitcase',
)

GENERIC_TAGS: Tuple[str, ...] = (
    'sunset', 'travel', 'foodie', 'coffee', 'weekend', 'family', 'nature', 'art', 'music',
    'fitness', 'books', 'citylife', 'beach', 'friends', 'photography', 'summer', 'instagood',
    'picoftheday', 'ootd', 'throwback', 'homemade', 'wanderlust', 'petsofinstagram', 'sky',
)
PROMO_TAGS: Tuple[str, ...] = (
    'contest', 'giveaway_contest', 'repost', 'repostapp', 'mention', 'mentionme', 'contestalert',
)
FOLLOW_TAGS: Tuple[str, ...] = (
    'follow4follow', 'followme', 'like4like', 'likeforlikes', 'followforfollowback', 'f4follow',
)
NEAR_EMPTY_CAPTIONS: Tuple[str, ...] = ('', '.', '..', '!!', '?')


@dataclass(frozen=True)
class ClassProfile:
    """Generation parameters for one user class"""
    user_class: UserClass
    post_count_median: float
    post_count_dispersion: float
    followers_median: float
    followers_dispersion: float
    following_median: float
    following_dispersion: float
    bio_len_median: float
    bio_len_dispersion: float
    pic_prob: float
    link_base_logit: float
    link_bio_slope: float  # link probability = logistic(base + slope * bio length)
    caption_len_median: float
    zero_caption_prob: float
    no_image_prob: float
    location_prob: float
    hashtag_rate: float  # generic hashtags per post
    promo_rate: float  # promotional hashtags per post
    follow_rate: float  # follower-hunter hashtags per post
    keyword_dispersion: float  # per-account spread of promo/follow rates
    vocab_reuse: float
    likes_rate: float  # likes per follower per post
    comments_rate: float  # comments per follower per post
    engagement_dispersion: float  # shared likes/comments multiplier spread
    comments_dispersion: float  # extra comments-only multiplier spread
    behavior_dispersion: float  # per-account spread of caption length, generic tags and post gaps
    rate_concentration: float  # Beta concentration of per-account post probabilities
    post_interval_median_hours: float

    def __post_init__(self):
        for name in ('pic_prob', 'zero_caption_prob', 'no_image_prob', 'location_prob', 'vocab_reuse'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{self.user_class.token}: {name} must be in [0, 1], got {value}")
        for f in fields(self):
            if f.name in ('user_class', 'link_base_logit', 'link_bio_slope'):
                continue
            value = getattr(self, f.name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{self.user_class.token}: {f.name} must be finite and >= 0, got {value}")
        for name in ('post_count_median', 'followers_median', 'following_median',
                     'bio_len_median', 'caption_len_median', 'post_interval_median_hours',
                     'rate_concentration'):
            if getattr(self, name) <= 0:
                raise ValueError(f"{self.user_class.token}: {name} must be positive")


@dataclass
class SyntheticDataset:
    accounts: List[AccountRecord]
    labels: List[Tuple[str, UserClass]]

    def write(self, out_dir: str) -> Tuple[str, str]:
        """Write accounts JSONL and the labels sidecar; returns both paths"""
        os.makedirs(out_dir, exist_ok=True)
        accounts_path = os.path.join(out_dir, ACCOUNTS_FILENAME)
        labels_path = os.path.join(out_dir, LABELS_FILENAME)
        write_accounts_jsonl(self.accounts, accounts_path)
        write_labels_csv(self.labels, labels_path)
        return accounts_path, labels_path


def default_profiles() -> List[ClassProfile]:
    """
    Default per-class profiles in canonical class order

    Authentic users: most followers, fewest followings, longest bios and
    captions, most location tags and comments, least repeated vocabulary.
    Inactive fakes: few posts, long gaps and only ~76% have a profile picture.
    Spammers: most posts, most promotional and follower-hunter hashtags.
    Fakes collect more likes per follower than authentic users.

    Every account also draws its own rates around the class values, so the
    classes overlap and no single feature separates them.
    """
    shared = dict(
        post_count_dispersion=0.9,
        followers_dispersion=1.2,
        following_dispersion=0.9,
        bio_len_dispersion=0.8,
        link_base_logit=-5.0,
        link_bio_slope=0.13,
        keyword_dispersion=0.6,
        engagement_dispersion=0.6,
        comments_dispersion=0.6,
        behavior_dispersion=0.6,
        rate_concentration=5.0,
    )
    return [
        ClassProfile(
            user_class=UserClass.AUTHENTIC,
            post_count_median=40, followers_median=700, following_median=300,
            bio_len_median=55, pic_prob=0.98,
            caption_len_median=90, zero_caption_prob=0.06, no_image_prob=0.03, location_prob=0.18,
            hashtag_rate=2.0, promo_rate=0.06, follow_rate=0.05, vocab_reuse=0.15,
            likes_rate=0.045, comments_rate=0.005, post_interval_median_hours=50, **shared),
        ClassProfile(
            user_class=UserClass.ACTIVE_FAKE,
            post_count_median=30, followers_median=220, following_median=1000,
            bio_len_median=28, pic_prob=0.96,
            caption_len_median=60, zero_caption_prob=0.13, no_image_prob=0.08, location_prob=0.08,
            hashtag_rate=1.5, promo_rate=0.15, follow_rate=0.15, vocab_reuse=0.4,
            likes_rate=0.06, comments_rate=0.0035, post_interval_median_hours=30, **shared),
        ClassProfile(
            user_class=UserClass.INACTIVE_FAKE,
            post_count_median=6, followers_median=150, following_median=700,
            bio_len_median=18, pic_prob=0.76,
            caption_len_median=55, zero_caption_prob=0.15, no_image_prob=0.12, location_prob=0.07,
            hashtag_rate=1.0, promo_rate=0.08, follow_rate=0.12, vocab_reuse=0.45,
            likes_rate=0.06, comments_rate=0.003, post_interval_median_hours=300, **shared),
        ClassProfile(
            user_class=UserClass.SPAMMER,
            post_count_median=100, followers_median=280, following_median=1300,
            bio_len_median=35, pic_prob=0.98,
            caption_len_median=65, zero_caption_prob=0.12, no_image_prob=0.10, location_prob=0.06,
            hashtag_rate=1.5, promo_rate=0.9, follow_rate=1.0, vocab_reuse=0.5,
            likes_rate=0.055, comments_rate=0.003, post_interval_median_hours=10, **shared),
    ]


def _lognormal_count(rng: np.random.Generator, median: float, dispersion: float) -> int:
    return int(round(rng.lognormal(math.log(median), dispersion)))


def _mean_preserving_factor(rng: np.random.Generator, dispersion: float) -> float:
    return float(np.exp(rng.normal(0.0, dispersion) - dispersion * dispersion / 2.0))


def _account_prob(rng: np.random.Generator, mean: float, concentration: float) -> float:
    if mean <= 0.0 or mean >= 1.0:
        return mean
    return float(rng.beta(concentration * mean, concentration * (1.0 - mean)))


def _account_id(seed: int, user_class: UserClass, index: int) -> str:
    digest = hashlib.sha1(f"{seed}:{int(user_class)}:{index}".encode('utf-8')).hexdigest()
    return f"acct_{digest[:12]}"


def _words(rng: np.random.Generator, n_tokens: int, template: np.ndarray, reuse: float) -> List[str]:
    from_template = rng.random(n_tokens) < reuse
    template_idx = rng.integers(len(template), size=n_tokens)
    pool_idx = rng.integers(len(WORD_POOL), size=n_tokens)
    return [WORD_POOL[template[t]] if use else WORD_POOL[p]
            for use, t, p in zip(from_template, template_idx, pool_idx)]


def _biography(rng: np.random.Generator, length: int) -> str:
    if length <= 0:
        return ''
    words = []
    size = 0
    while size < length:
        word = WORD_POOL[rng.integers(len(WORD_POOL))]
        words.append(word)
        size += len(word) + 1
    return ' '.join(words)[:length]


def _pick_tags(rng: np.random.Generator, pool: Sequence[str], rate: float) -> List[str]:
    count = int(rng.poisson(rate)) if rate > 0 else 0
    return [pool[i] for i in rng.integers(len(pool), size=count)]


def _generate_account(rng: np.random.Generator, profile: ClassProfile, account_id: str) -> AccountRecord:
    n_posts = _lognormal_count(rng, profile.post_count_median, profile.post_count_dispersion)
    followers = _lognormal_count(rng, profile.followers_median, profile.followers_dispersion)
    following = _lognormal_count(rng, profile.following_median, profile.following_dispersion)
    bio_len = min(MAX_BIO_CHARS, _lognormal_count(rng, profile.bio_len_median, profile.bio_len_dispersion))
    biography = _biography(rng, bio_len)
    has_picture = bool(rng.random() < profile.pic_prob)
    link_prob = float(expit(profile.link_base_logit + profile.link_bio_slope * len(biography)))
    has_link = bool(rng.random() < link_prob)

    template = rng.choice(len(WORD_POOL), size=TEMPLATE_SIZE, replace=False)
    engagement = _mean_preserving_factor(rng, profile.engagement_dispersion)
    promo_rate = profile.promo_rate * _mean_preserving_factor(rng, profile.keyword_dispersion)
    follow_rate = profile.follow_rate * _mean_preserving_factor(rng, profile.keyword_dispersion)
    comments_factor = engagement * _mean_preserving_factor(rng, profile.comments_dispersion)
    zero_caption_prob = _account_prob(rng, profile.zero_caption_prob, profile.rate_concentration)
    no_image_prob = _account_prob(rng, profile.no_image_prob, profile.rate_concentration)
    location_prob = _account_prob(rng, profile.location_prob, profile.rate_concentration)
    vocab_reuse = _account_prob(rng, profile.vocab_reuse, profile.rate_concentration)
    caption_len = profile.caption_len_median * _mean_preserving_factor(rng, profile.behavior_dispersion)
    hashtag_rate = profile.hashtag_rate * _mean_preserving_factor(rng, profile.behavior_dispersion)
    interval_hours = profile.post_interval_median_hours * _mean_preserving_factor(rng, profile.behavior_dispersion)
    interval_scale = interval_hours * 3600.0 / math.log(2.0)

    posted_at = BASE_EPOCH + int(rng.integers(START_WINDOW_SECONDS))
    posts = []
    for i in range(n_posts):
        if i > 0:
            posted_at += int(round(rng.exponential(interval_scale)))
        if rng.random() < zero_caption_prob:
            caption = NEAR_EMPTY_CAPTIONS[rng.integers(len(NEAR_EMPTY_CAPTIONS))]
        else:
            n_tokens = max(1, int(rng.poisson(caption_len / CHARS_PER_TOKEN)))
            caption = ' '.join(_words(rng, n_tokens, template, vocab_reuse))
        hashtags = (_pick_tags(rng, GENERIC_TAGS, hashtag_rate)
                    + _pick_tags(rng, PROMO_TAGS, promo_rate)
                    + _pick_tags(rng, FOLLOW_TAGS, follow_rate))
        posts.append(PostRecord(
            caption=caption,
            hashtags=tuple(hashtags),
            likes=int(rng.poisson(profile.likes_rate * engagement * followers)),
            comments=int(rng.poisson(profile.comments_rate * comments_factor * followers)),
            has_image=bool(rng.random() >= no_image_prob),
            location_tagged=bool(rng.random() < location_prob),
            posted_at=posted_at,
        ))

    return AccountRecord(
        account_id=account_id,
        followers=followers,
        following=following,
        biography=biography,
        has_profile_picture=has_picture,
        has_external_link=has_link,
        posts=tuple(posts),
    )


def _generate_class(profile: ClassProfile, per_class: int, seed: int) -> List[AccountRecord]:
    # Independent stream per class: output does not depend on generation order
    rng = np.random.default_rng([seed, int(profile.user_class)])
    return [_generate_account(rng, profile, _account_id(seed, profile.user_class, i))
            for i in range(per_class)]


def generate_dataset(profiles: Sequence[ClassProfile], per_class: int, seed: int,
                     n_jobs: int = 1) -> SyntheticDataset:
    """
    Generate a balanced labeled dataset

    Args:
        profiles: One profile per class to generate
        per_class: Accounts per class (>= 1)
        seed: Master seed; output is a pure function of (profiles, per_class, seed)
        n_jobs: Classes generated in parallel when > 1

    Returns:
        SyntheticDataset with accounts grouped by class in profile order
    """
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    classes = [p.user_class for p in profiles]
    if len(set(classes)) != len(classes):
        raise ValueError("profiles must cover distinct classes")

    if n_jobs == 1:
        groups = [_generate_class(p, per_class, seed) for p in profiles]
    else:
        groups = Parallel(n_jobs=n_jobs)(delayed(_generate_class)(p, per_class, seed) for p in profiles)

    accounts: List[AccountRecord] = []
    labels: List[Tuple[str, UserClass]] = []
    for profile, group in zip(profiles, groups):
        accounts.extend(group)
        labels.extend((a.account_id, profile.user_class) for a in group)

    logger.info("Generated %d synthetic accounts (%d per class, seed %d)", len(accounts), per_class, seed)
    return SyntheticDataset(accounts=accounts, labels=labels)
