from datetime import date

import numpy as np

from tsesent.ingest import Label
from tsesent.synthetic import planted_corpus, polarity_corpus, synthetic_stock, trading_calendar


def test_calendar_skips_weekend():
    days = trading_calendar(date(2021, 1, 1), 10)
    assert len(days) == 10 and all(d.weekday() not in (3, 4) for d in days)


def test_corpora_balanced_and_seeded():
    for make in (planted_corpus, polarity_corpus):
        a, _ = make(200, seed=3)
        b, _ = make(200, seed=3)
        assert a == b
        assert sum(lab is Label.BULLISH for _, lab in a) == 100


def test_stock_return_law():
    s = synthetic_stock(n_days=120, seed=1)
    closes = np.array([b.close for b in s.bars])
    assert np.all(closes > 0) and len(s.corpus) > 120
    assert s.count_with_likes.min() >= 1
    assert synthetic_stock(n_days=120, seed=1, planted=False).beta == 0.0
