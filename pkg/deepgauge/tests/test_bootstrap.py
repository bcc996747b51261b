# -*- coding: utf-8 -*-
import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from deepgauge.bootstrap import BlockPlan, block_indices, block_resample, bootstrap_replicates, summarize
from deepgauge.exceptions import ConfigurationError, DomainError
from deepgauge.margins import DataMatrix, MarginTag


def column_mean(data, k):
    return {"mean": float(data.values[:, 0].mean()), "k": k}


class TestBlockResample(SimpleTestCase):

    def setUp(self):
        values = np.column_stack([np.arange(50.0), np.arange(50.0) * 10])
        self.data = DataMatrix(values, MarginTag.LAPLACE, ("a", "b"))

    def test_single_block_is_rotation(self):
        out = block_resample(self.data, BlockPlan(50, seed=3))
        shift = int(out.values[0, 0])
        np.testing.assert_array_equal(out.values, np.roll(self.data.values, -shift, axis=0))

    def test_unit_blocks(self):
        indices = block_indices(50, BlockPlan(1, seed=4))
        expected = np.random.default_rng(4).integers(0, 50, size=50)
        np.testing.assert_array_equal(indices, expected)

    def test_row_count_and_rows(self):
        for length in (1, 3, 7, 49, 50):
            out = block_resample(self.data, BlockPlan(length, seed=length))
            self.assertEqual(out.n, 50)
            self.assertTrue(np.all(out.values[:, 1] == out.values[:, 0] * 10))

    def test_blocks_keep_order(self):
        indices = block_indices(50, BlockPlan(5, seed=0)).reshape(10, 5)
        steps = np.diff(indices, axis=1) % 50
        self.assertTrue(np.all(steps == 1))

    def test_keeps_tags(self):
        out = block_resample(self.data, BlockPlan(5))
        self.assertEqual(out.margin, MarginTag.LAPLACE)
        self.assertEqual(out.columns, ("a", "b"))

    def test_deterministic(self):
        np.testing.assert_array_equal(block_indices(50, BlockPlan(4, 9)), block_indices(50, BlockPlan(4, 9)))

    def test_block_too_long(self):
        with self.assertRaises(DomainError):
            block_resample(self.data, BlockPlan(51))

    def test_bad_length(self):
        with self.assertRaises(ConfigurationError):
            BlockPlan(0)

    def test_replicate_seeds_differ(self):
        plan = BlockPlan(5, seed=1)
        seeds = {plan.replicate(k).seed for k in range(20)}
        self.assertEqual(len(seeds), 20)
        self.assertEqual(plan.replicate(3), plan.replicate(3))


class TestReplicates(SimpleTestCase):

    def setUp(self):
        self.data = DataMatrix(np.random.default_rng(0).laplace(size=(200, 2)))

    def test_frame(self):
        frame = bootstrap_replicates(self.data, BlockPlan(10, 5), 6, column_mean)
        self.assertEqual(list(frame.columns), ["replicate", "mean", "k"])
        self.assertEqual(frame["k"].tolist(), list(range(6)))
        self.assertEqual(frame["mean"].nunique(), 6)

    def test_reproducible(self):
        one = bootstrap_replicates(self.data, BlockPlan(10, 5), 3, column_mean)
        two = bootstrap_replicates(self.data, BlockPlan(10, 5), 3, column_mean)
        pd.testing.assert_frame_equal(one, two)

    def test_pool_matches_serial(self):
        serial = bootstrap_replicates(self.data, BlockPlan(10, 5), 4, column_mean)
        pooled = bootstrap_replicates(self.data, BlockPlan(10, 5), 4, column_mean, processes=2)
        pd.testing.assert_frame_equal(serial, pooled)

    def test_summarize(self):
        frame = pd.DataFrame({"replicate": range(101), "value": np.arange(101.0)})
        table = summarize(frame)
        self.assertEqual(list(table.index), ["p2.5", "p50", "p97.5"])
        self.assertEqual(list(table.columns), ["value"])
        self.assertAlmostEqual(table.loc["p50", "value"], 50.0)
        self.assertAlmostEqual(table.loc["p97.5", "value"], 97.5)
