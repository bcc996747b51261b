# -*- coding: utf-8 -*-
import logging

import numpy as np
import pandas as pd

from deepgauge.cli import ConfiguredCommand, add_training_arguments
from deepgauge.exceptions import DeepGaugeError, DomainError, TwoStageError
from deepgauge.forms import FitForm
from deepgauge.gauge import QuantileFit, fit, fit_gauge, fit_threshold
from deepgauge.geometry import decompose
from deepgauge.margins import MarginTag, to_laplace
from deepgauge.models import FittedGauge
from deepgauge.neuralnet import MlpParams
from deepgauge.utils import dumps, file_digest, read_dataset, read_json, write_frame

log = logging.getLogger(__name__)


def _arch(widths):
    return ",".join(str(width) for width in widths)


class Command(ConfiguredCommand):
    help = "Fit the two-stage gauge model (quantile surface, then truncated gamma gauge) to a Laplace-margin dataset."
    form_class = FitForm

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--data")
        parser.add_argument("--output", help="model bundle (JSON)")
        parser.add_argument("--log", help="per-epoch loss CSV, <output>.log.csv by default")
        parser.add_argument("--rank-transform", dest="rank_transform", action="store_true", default=None)
        parser.add_argument("--stage", help="all, threshold or gauge")
        parser.add_argument("--threshold-model", dest="threshold_model",
                            help="bundle of a previous --stage threshold run")
        add_training_arguments(parser)

    def load(self, cleaned):
        """
        Read the dataset and bring it to Laplace margins
        :param cleaned: validated FitForm data
        :return: (DataMatrix on Laplace margins, sidecar)
        """
        data, sidecar = read_dataset(cleaned["data"])
        if data.margin is not MarginTag.LAPLACE:
            if not cleaned.get("rank_transform"):
                raise DomainError(f"{cleaned['data']} has {data.margin.value} margins; "
                                  f"transform it first or pass --rank-transform")
            data = to_laplace(data)
        return data, sidecar

    def run(self, cleaned):
        data, sidecar = self.load(cleaned)
        polar = decompose(data)
        config = cleaned["train_config"]
        if cleaned["stage"] == "threshold":
            return self.run_threshold(cleaned, polar, sidecar)

        record = FittedGauge.objects.create(
            seed=config.seed, data_digest=file_digest(cleaned["data"]), dimension=data.d, n_obs=data.n,
            tau=cleaned["tau"], threshold_arch=_arch(cleaned["threshold_arch"]), gauge_arch=_arch(cleaned["gauge_arch"]),
        )
        try:
            if cleaned["stage"] == "gauge":
                quantile_fit = self.load_threshold(cleaned["threshold_model"], record.data_digest)
                record.tau = quantile_fit.tau
                model, logs, exceedances = fit_gauge(polar, quantile_fit, cleaned["gauge_arch"], config,
                                                     cleaned["reference_size"], cleaned["reference_seed"])
            else:
                result = fit(polar, cleaned["tau"], cleaned["threshold_arch"], cleaned["gauge_arch"], config,
                             cleaned["reference_size"], cleaned["reference_seed"])
                model, logs, exceedances = result.model, result.logs, result.exceedances
        except DeepGaugeError as exc:
            record.fail(str(exc))
            raise

        bundle = dumps({"model": model.to_dict(), "provenance": sidecar, "exceedances": exceedances})
        with open(cleaned["output"], "w") as handle:
            handle.write(bundle)
        write_frame(cleaned.get("log") or f"{cleaned['output']}.log.csv",
                    pd.concat([training_log.to_frame() for training_log in logs], ignore_index=True))
        record.record_logs(logs)
        record.finish(model, exceedances, logs[-1].best_validation_loss, bundle)
        log.info(f"Fit {record.pk}: alpha={model.alpha:.4g}, {exceedances} exceedances")
        return str(exceedances)

    def run_threshold(self, cleaned, polar, sidecar):
        quantile_fit = fit_threshold(polar, cleaned["tau"], cleaned["threshold_arch"], cleaned["train_config"])
        bundle = {
            "stage": "threshold",
            "tau": quantile_fit.tau,
            "quantile_net": quantile_fit.params.to_dict(),
            "split": {"train": quantile_fit.split[0], "validation": quantile_fit.split[1]},
            "exceedance_fraction": quantile_fit.exceedance_fraction,
            "data_digest": file_digest(cleaned["data"]),
            "provenance": sidecar,
        }
        with open(cleaned["output"], "w") as handle:
            handle.write(dumps(bundle))
        write_frame(cleaned.get("log") or f"{cleaned['output']}.log.csv", quantile_fit.log.to_frame())
        return f"{quantile_fit.exceedance_fraction:.6f}"

    def load_threshold(self, path, data_digest):
        """
        Rebuild the quantile stage of a previous threshold run
        :param path: bundle written by --stage threshold
        :param data_digest: digest of the dataset the gauge stage runs on
        :return: QuantileFit
        """
        bundle = read_json(path)
        if bundle.get("stage") != "threshold":
            raise TwoStageError(f"{path} is not the output of a threshold stage")
        if bundle.get("data_digest") != data_digest:
            raise TwoStageError(f"{path} was fitted to a different dataset")
        try:
            split = (np.asarray(bundle["split"]["train"], dtype=int),
                     np.asarray(bundle["split"]["validation"], dtype=int))
            return QuantileFit(MlpParams.from_dict(bundle["quantile_net"]), float(bundle["tau"]), split, None,
                               float(bundle["exceedance_fraction"]))
        except DeepGaugeError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"{path} is not a valid threshold bundle: {exc!r}") from exc
