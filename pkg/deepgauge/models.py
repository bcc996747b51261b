# -*- coding: utf-8 -*-
"""
Run ledger: fitted models, their training curves, suspicious fits and the
results of simulation studies.
"""
import json
import logging

import numpy as np
from django.conf import settings
from django.db import models

from deepgauge.gauge import GaugeModel

log = logging.getLogger(__name__)


class FittedGaugeManager(models.Manager):

    def finished(self):
        """
        Fits whose gauge stage completed
        :return:
        """
        return self.filter(status=FittedGauge.FINISHED)

    def latest_for_digest(self, digest):
        """
        Most recent finished fit of the dataset with the given digest
        :param digest: sha256 of the data file
        :return:
        """
        return self.finished().filter(data_digest=digest).order_by("-created", "-id").first()

    def best_for_digest(self, digest):
        """
        Finished fit of the dataset with the lowest validation loss of the gauge stage
        :param digest:
        :return:
        """
        fits = self.finished().filter(data_digest=digest, gauge_validation_loss__isnull=False)
        return fits.order_by("gauge_validation_loss").first()


class FittedGauge(models.Model):
    RUNNING = "running"
    FINISHED = "finished"
    FAILED = "failed"
    STATUSES = ((RUNNING, "Running"), (FINISHED, "Finished"), (FAILED, "Failed"))

    seed = models.IntegerField("Seed")
    data_digest = models.CharField("Data digest", max_length=64, db_index=True)
    dimension = models.PositiveIntegerField("Dimension")
    n_obs = models.PositiveIntegerField("Observations")
    tau = models.FloatField("Quantile level")
    threshold_arch = models.CharField("Threshold architecture", max_length=100)
    gauge_arch = models.CharField("Gauge architecture", max_length=100)
    alpha = models.FloatField("Shape", null=True, blank=True)
    exceedances = models.PositiveIntegerField("Exceedances", default=0)
    gauge_validation_loss = models.FloatField("Gauge validation loss", null=True, blank=True)
    status = models.CharField("Status", max_length=20, choices=STATUSES, default=RUNNING)
    created = models.DateTimeField("Created", auto_now_add=True)
    bundle = models.TextField(default="{}")  # JSON serialized GaugeModel
    message = models.TextField(blank=True, default="")

    objects = FittedGaugeManager()

    class Meta:
        app_label = "deepgauge"

    def __str__(self):
        return f"FittedGauge({self.pk}, d={self.dimension}, tau={self.tau}, {self.status})"

    def model(self):
        return GaugeModel.from_dict(json.loads(self.bundle)["model"])

    def record_logs(self, logs):
        """
        Store the per-epoch losses of every training stage
        :param logs: list of TrainingLog
        :return:
        """
        TrainingEpoch.objects.bulk_create([
            TrainingEpoch(fit=self, stage=training_log.stage, epoch=record.epoch,
                          train_loss=record.train_loss, validation_loss=record.validation_loss)
            for training_log in logs for record in training_log.records
        ])

    def finish(self, model, exceedances, gauge_validation_loss, bundle):
        self.alpha = model.alpha
        self.exceedances = exceedances
        self.gauge_validation_loss = gauge_validation_loss
        self.bundle = bundle
        self.status = self.FINISHED
        self.save()
        SuspectedFit.is_fit_suspected(self)

    def fail(self, message):
        self.status = self.FAILED
        self.message = message
        self.save()


class TrainingEpoch(models.Model):
    fit = models.ForeignKey(FittedGauge, related_name="epochs", on_delete=models.CASCADE)
    stage = models.CharField("Stage", max_length=20)
    epoch = models.PositiveIntegerField("Epoch")
    train_loss = models.FloatField("Training loss")
    validation_loss = models.FloatField("Validation loss")

    class Meta:
        app_label = "deepgauge"
        ordering = ("fit", "id")


class SuspectedFit(models.Model):
    fit = models.ForeignKey(FittedGauge, related_name="suspects", on_delete=models.CASCADE)
    reason = models.TextField("Reason")
    created = models.DateTimeField(auto_now_add=True)

    class Meta:
        app_label = "deepgauge"

    @staticmethod
    def is_fit_suspected(fit):
        """
        Flag fits whose shape parameter sits on a bound or whose gauge stage
        saw too few exceedances.
        :param fit: FittedGauge
        :return: True if the fit was flagged
        """
        reasons = []
        low, high = settings.GAUGE_ALPHA_BOUNDS
        high = high * fit.dimension
        margin = settings.SUSPECT_ALPHA_MARGIN
        if fit.alpha is not None and (fit.alpha <= low * (1 + margin) or fit.alpha >= high * (1 - margin)):
            reasons.append(f"alpha={fit.alpha:.4g} at its bound [{low}, {high}]")
        if fit.exceedances < settings.SUSPECT_MIN_EXCEEDANCES:
            reasons.append(f"only {fit.exceedances} exceedances")
        for reason in reasons:
            log.warning(f"Fit {fit.pk} suspected: {reason}")
            SuspectedFit.objects.create(fit=fit, reason=reason)
        return bool(reasons)


class StudyCellManager(models.Manager):

    def for_study(self, label):
        return self.filter(study=label).order_by("id")

    def summary(self, label):
        """
        Median and 2.5/97.5 percentiles of ISE and MALE per cell
        :param label: study label
        :return: list of dicts, one per cell
        """
        rows = []
        for cell in self.for_study(label).prefetch_related("replicates"):
            done = [r for r in cell.replicates.all() if r.status == StudyReplicate.FINISHED]
            row = {
                "copula": cell.copula, "d": cell.dimension, "n": cell.n_obs,
                "tau": cell.tau, "arch": cell.gauge_arch,
                "replicates_ok": len(done),
                "replicates_failed": len(cell.replicates.all()) - len(done),
            }
            for metric in ("ise", "male"):
                values = np.array([getattr(r, metric) for r in done if getattr(r, metric) is not None])
                bounds = np.percentile(values, [50.0, 2.5, 97.5]) if values.size else [np.nan] * 3
                row.update({f"{metric}_median": bounds[0], f"{metric}_p025": bounds[1], f"{metric}_p975": bounds[2]})
            rows.append(row)
        return rows


class StudyCell(models.Model):
    study = models.CharField("Study", max_length=100, db_index=True)
    copula = models.CharField("Copula", max_length=20)
    dimension = models.PositiveIntegerField("Dimension")
    n_obs = models.PositiveIntegerField("Observations")
    tau = models.FloatField("Quantile level")
    gauge_arch = models.CharField("Gauge architecture", max_length=100)
    created = models.DateTimeField("Created", auto_now_add=True)

    objects = StudyCellManager()

    class Meta:
        app_label = "deepgauge"


class StudyReplicate(models.Model):
    FINISHED = "finished"
    FAILED = "failed"
    STATUSES = ((FINISHED, "Finished"), (FAILED, "Failed"))

    cell = models.ForeignKey(StudyCell, related_name="replicates", on_delete=models.CASCADE)
    replicate = models.PositiveIntegerField("Replicate")
    seed = models.BigIntegerField("Seed")
    ise = models.FloatField("ISE", null=True, blank=True)
    male = models.FloatField("MALE", null=True, blank=True)
    status = models.CharField("Status", max_length=20, choices=STATUSES, default=FINISHED)
    error = models.TextField(blank=True, default="")

    class Meta:
        app_label = "deepgauge"
        ordering = ("cell", "replicate")
