# -*- coding: utf-8 -*-
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, TestCase

from deepgauge.copulas import CopulaKind
from deepgauge.exceptions import ConfigurationError
from deepgauge.models import StudyReplicate
from deepgauge.neuralnet import TrainConfig
from deepgauge.study import ReplicateTask, StudyGrid, run_replicate, run_study


class TestStudyGrid(SimpleTestCase):

    def test_cells(self):
        grid = StudyGrid(copulas=("gaussian", "logistic"), dims=(2, 3), ns=(100,), taus=(0.5, 0.75), archs=((4,),))
        cells = grid.cells()
        self.assertEqual(len(cells), 8)
        self.assertEqual(cells[0], ("gaussian", 2, 100, 0.5, (4,)))

    def test_specs(self):
        grid = StudyGrid(nu=3.0, theta=0.4)
        self.assertEqual(grid.spec("logistic", 3).theta, 0.4)
        t = grid.spec("student_t", 3)
        self.assertEqual(t.kind, CopulaKind.STUDENT_T)
        self.assertEqual(t.nu, 3.0)
        # nested matrices: the leading block of a larger dimension is the smaller one
        np.testing.assert_array_equal(grid.spec("gaussian", 5).corr[:3, :3], grid.spec("gaussian", 3).corr)

    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            StudyGrid(replicates=0)
        with self.assertRaises(ConfigurationError):
            StudyGrid(dims=())
        with self.assertRaises(ConfigurationError):
            StudyGrid(copulas=("clayton",))


class TestReplicate(SimpleTestCase):

    def test_failure_is_recorded(self):
        spec = StudyGrid().spec("gaussian", 2).to_dict()
        # a single observation cannot support a quantile surface
        task = ReplicateTask(spec, 1, 0.75, (4,), (4,), TrainConfig(epochs=2), 200, 0, 0.9995, 1)
        outcome = run_replicate(task)
        self.assertEqual(outcome["status"], StudyReplicate.FAILED)
        self.assertIsNone(outcome["ise"])
        self.assertTrue(outcome["error"])

    def test_unexpected_error_is_recorded(self):
        spec = StudyGrid().spec("gaussian", 2).to_dict()
        task = ReplicateTask(spec, 500, 0.75, (4,), (4,), TrainConfig(epochs=2), 200, 0, 0.9995, 1)
        with mock.patch("deepgauge.study.sample", side_effect=np.linalg.LinAlgError("not positive definite")):
            with self.assertLogs("deepgauge.study", level="ERROR"):
                outcome = run_replicate(task)
        self.assertEqual(outcome["status"], StudyReplicate.FAILED)
        self.assertEqual(outcome["error"], "LinAlgError: not positive definite")


class TestRunStudy(TestCase):

    def test_failed_replicates_do_not_stop_the_study(self):
        grid = StudyGrid(dims=(2, 3), ns=(500,), archs=((4,),), replicates=2, threshold_arch=(4,),
                         train_config=TrainConfig(epochs=2), reference_size=200)
        with mock.patch("deepgauge.study.sample", side_effect=ValueError("bad covariance")):
            rows = run_study(grid, "broken", processes=1)
        self.assertEqual(len(rows), 2)
        self.assertEqual([row["replicates_failed"] for row in rows], [2, 2])
        self.assertEqual(StudyReplicate.objects.filter(status=StudyReplicate.FAILED).count(), 4)
        self.assertTrue(all(np.isnan(row["ise_median"]) for row in rows))
