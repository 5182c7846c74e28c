#!/usr/bin/env python3
"""
Shared test fixtures
Account/post builders and a small synthetic labeled dataset
"""
import pytest

from account_records import AccountRecord, PostRecord
from feature_extractor import label_examples
from synthetic_accounts import default_profiles, generate_dataset

BASE_TIME = 1_600_000_000


def build_post(**overrides) -> PostRecord:
    values = dict(caption='sunny day at the beach', hashtags=(), likes=10, comments=1,
                  has_image=True, location_tagged=False, posted_at=BASE_TIME)
    values.update(overrides)
    values['hashtags'] = tuple(values['hashtags'])
    return PostRecord(**values)


def build_account(posts=(), **overrides) -> AccountRecord:
    values = dict(account_id='a1', followers=100, following=50, biography='hello there',
                  has_profile_picture=True, has_external_link=False)
    values.update(overrides)
    return AccountRecord(posts=tuple(posts), **values)


@pytest.fixture
def make_post():
    return build_post


@pytest.fixture
def make_account():
    return build_account


@pytest.fixture(scope='session')
def small_dataset():
    return generate_dataset(default_profiles(), per_class=40, seed=3)


@pytest.fixture(scope='session')
def small_examples(small_dataset):
    return label_examples(small_dataset.accounts, dict(small_dataset.labels))


@pytest.fixture(scope='session')
def default_examples():
    """Features of the default 700-per-class dataset (slow tests only)"""
    dataset = generate_dataset(default_profiles(), per_class=700, seed=42)
    return label_examples(dataset.accounts, dict(dataset.labels))
