#!/usr/bin/env python3
"""
Test script for feature extraction
"""
import json

import numpy as np
import pytest

from account_records import AccountRecord, SchemaError, UserClass
from conftest import BASE_TIME, build_account, build_post
from feature_extractor import (KeywordConfig, caption_stats, engagement_rates, extract_batch, extract_features,
                               keyword_rate, label_examples, load_keyword_config, mean_interval_hours,
                               pairwise_cosine, tokenize_caption)

FRACTIONS = ('cz', 'ni', 'lt', 'cs')


def test_account_without_posts():
    account = build_account(followers=5, following=9, biography='hi', has_profile_picture=True,
                            has_external_link=False)
    fv = extract_features(account)
    assert (fv.pos, fv.flw, fv.flg, fv.bl, fv.pic, fv.lin) == (0.0, 5.0, 9.0, 2.0, 1.0, 0.0)
    for name in ('cl', 'cz', 'ni', 'erl', 'erc', 'lt', 'hc', 'pr', 'fo', 'cs', 'pi'):
        assert getattr(fv, name) == 0.0


def test_engagement_rates():
    posts = [build_post(likes=10, comments=1), build_post(likes=20, comments=3)]
    erl, erc = engagement_rates(posts, 100)
    assert erl == pytest.approx(0.15)
    assert erc == pytest.approx(0.02)
    assert engagement_rates(posts, 0) == (0.0, 0.0)
    assert engagement_rates([build_post(likes=0), build_post(likes=0)], 50)[0] == 0.0


def test_hashtag_mean():
    account = build_account(posts=[build_post(hashtags=['a', 'b'], posted_at=1),
                                   build_post(hashtags=['c', 'd', 'e', 'f'], posted_at=2)])
    assert extract_features(account).hc == 3.0


def test_keyword_rate_normalizes_tags():
    defaults = KeywordConfig()
    post = build_post(hashtags=['Follow4Follow', 'sunset'])
    assert keyword_rate([post], defaults.follower_hunter) == 1.0
    assert keyword_rate([build_post(hashtags=[])], defaults.follower_hunter) == 0.0
    assert keyword_rate([], defaults.promotional) == 0.0

    two = [build_post(hashtags=['Follow_For_Follow', 'likeforlike']), build_post(hashtags=['beach'])]
    assert keyword_rate(two, defaults.follower_hunter) == 1.0


def test_keyword_rate_counts_each_tag_once():
    post = build_post(hashtags=['followlike'])
    assert keyword_rate([post], ('follow', 'like')) == 1.0


def test_caption_stats():
    assert caption_stats([build_post(caption='abcd'), build_post(caption='')]) == (2.0, 0.5)
    assert caption_stats([build_post(caption='ok')])[1] == 1.0
    assert caption_stats([]) == (0.0, 0.0)


def test_pairwise_cosine():
    same = [build_post(caption='great view'), build_post(caption='great view')]
    assert pairwise_cosine(same) == pytest.approx(1.0)
    half = [build_post(caption='follow like'), build_post(caption='follow win')]
    assert pairwise_cosine(half) == pytest.approx(0.5)
    disjoint = [build_post(caption='alpha beta'), build_post(caption='gamma delta')]
    assert pairwise_cosine(disjoint) == 0.0
    assert pairwise_cosine([build_post()]) == 0.0


def test_tokenize_caption_keeps_non_ascii_letters():
    assert tokenize_caption('Привет, мир!') == ['привет', 'мир']
    assert tokenize_caption('Café_au lait 東京2024') == ['café', 'au', 'lait', '東京2024']
    same = [build_post(caption='привет мир'), build_post(caption='привет мир')]
    assert pairwise_cosine(same) == pytest.approx(1.0)
    half = [build_post(caption='été plage'), build_post(caption='été montagne')]
    assert pairwise_cosine(half) == pytest.approx(0.5)


def test_pairwise_cosine_empty_caption_counts_zero():
    posts = [build_post(caption='red car'), build_post(caption='red car'), build_post(caption='')]
    # pairs: (1, 1) -> 1, two pairs with the empty caption -> 0
    assert pairwise_cosine(posts) == pytest.approx(1.0 / 3.0)


def test_cosine_hashtag_switch():
    posts = [build_post(caption='one', hashtags=['shared']), build_post(caption='two', hashtags=['shared'])]
    assert pairwise_cosine(posts) == 0.0
    assert pairwise_cosine(posts, include_hashtags=True) == pytest.approx(0.5)
    account = build_account(posts=posts)
    assert extract_features(account, KeywordConfig(cs_include_hashtags=True)).cs == pytest.approx(0.5)


def test_mean_interval_hours():
    assert mean_interval_hours([build_post(posted_at=0), build_post(posted_at=3600)]) == 1.0
    three = [build_post(posted_at=0), build_post(posted_at=3600), build_post(posted_at=10800)]
    assert mean_interval_hours(three) == 1.5
    assert mean_interval_hours([build_post()]) == 0.0


def test_post_order_does_not_matter():
    posts = [build_post(caption=f"post number {i}", likes=i, posted_at=BASE_TIME + 977 * i,
                        has_image=i % 2 == 0, location_tagged=i % 3 == 0, hashtags=['follow'] * (i % 2))
             for i in range(6)]
    forward = extract_features(build_account(posts=posts))
    backward = extract_features(build_account(posts=list(reversed(posts))))
    assert forward == backward


def test_engagement_scales_linearly():
    posts = [build_post(likes=7, comments=2, posted_at=1), build_post(likes=11, comments=0, posted_at=2)]
    scaled = [build_post(likes=3 * p.likes, comments=3 * p.comments, posted_at=p.posted_at) for p in posts]
    base = extract_features(build_account(posts=posts))
    tripled = extract_features(build_account(posts=scaled))
    assert tripled.erl == pytest.approx(3 * base.erl, rel=1e-12)
    assert tripled.erc == pytest.approx(3 * base.erc, rel=1e-12)
    assert np.array_equal(np.delete(base.as_array(), [9, 10]), np.delete(tripled.as_array(), [9, 10]))


def random_account(rng: np.random.Generator, index: int) -> AccountRecord:
    words = ['sun', 'follow', 'like', 'café', 'x', '!', 'contest', 'dog', 'mention', 'привет', '東京', 'ñ_ñ']
    posts = []
    for _ in range(int(rng.integers(0, 8))):
        n_words = int(rng.integers(0, 6))
        posts.append(build_post(
            caption=' '.join(rng.choice(words, n_words)) if n_words else '',
            hashtags=list(rng.choice(words, int(rng.integers(0, 4)))),
            likes=int(rng.integers(0, 500)),
            comments=int(rng.integers(0, 50)),
            has_image=bool(rng.integers(0, 2)),
            location_tagged=bool(rng.integers(0, 2)),
            posted_at=int(rng.integers(0, 10**9)),
        ))
    return build_account(account_id=f"f{index}", followers=int(rng.integers(0, 10**6)),
                         following=int(rng.integers(0, 5000)), biography='b' * int(rng.integers(0, 151)),
                         has_profile_picture=bool(rng.integers(0, 2)), has_external_link=bool(rng.integers(0, 2)),
                         posts=posts)


def check_ranges(accounts):
    for fv in extract_batch(accounts):
        values = fv.as_array()
        assert np.all(np.isfinite(values))
        assert np.all(values >= 0)
        for name in FRACTIONS:
            assert 0.0 <= getattr(fv, name) <= 1.0


def test_fuzz_ranges_quick():
    rng = np.random.default_rng(11)
    check_ranges([random_account(rng, i) for i in range(300)])


@pytest.mark.slow
def test_fuzz_ranges_full():
    rng = np.random.default_rng(12)
    check_ranges([random_account(rng, i) for i in range(10_000)])


def test_keyword_config_validation(tmp_path):
    with pytest.raises(ValueError):
        KeywordConfig(promotional=('Contest',))
    with pytest.raises(ValueError):
        KeywordConfig(follower_hunter=('  ',))

    path = tmp_path / 'keywords.json'
    path.write_text(json.dumps({'promotional': ['giveaway'], 'cs_include_hashtags': True}), encoding='utf-8')
    config = load_keyword_config(str(path))
    assert config.promotional == ('giveaway',)
    assert config.follower_hunter == KeywordConfig().follower_hunter
    assert config.cs_include_hashtags is True

    path.write_text(json.dumps({'promotional': ['Giveaway']}), encoding='utf-8')
    with pytest.raises(SchemaError):
        load_keyword_config(str(path))


def test_label_examples_requires_every_label():
    accounts = [build_account(account_id='a1'), build_account(account_id='a2')]
    with pytest.raises(SchemaError):
        label_examples(accounts, {'a1': UserClass.AUTHENTIC})
    examples = label_examples(accounts, {'a1': UserClass.AUTHENTIC, 'a2': UserClass.SPAMMER})
    assert [(e.account_id, e.label) for e in examples] == [('a1', UserClass.AUTHENTIC), ('a2', UserClass.SPAMMER)]
