# -*- coding: utf-8 -*-
"""
Run configuration schemas of the management commands. Each form validates a
merged payload (config file values overridden by command-line flags) before
any computation starts.
"""
import logging

from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from deepgauge.bootstrap import BlockPlan
from deepgauge.copulas import CopulaKind, CopulaSpec, equicorrelation, nested_correlation
from deepgauge.exceptions import ConfigurationError
from deepgauge.margins import MarginTag
from deepgauge.neuralnet import TrainConfig

log = logging.getLogger(__name__)

COPULA_CHOICES = [(kind.value, kind.value) for kind in CopulaKind]
MARGIN_CHOICES = [(tag.value, tag.value) for tag in MarginTag]


def _split(value, separator=","):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [part.strip() for part in str(value).split(separator) if part.strip()]


class WidthsField(forms.Field):
    """Hidden-layer widths, given as "64,64,64" or a JSON list."""

    def to_python(self, value):
        if value in self.empty_values:
            return None
        try:
            widths = tuple(int(part) for part in _split(value))
        except (TypeError, ValueError):
            raise ValidationError("widths must be comma separated integers", code="invalid")
        if not widths or any(width < 1 for width in widths):
            raise ValidationError("widths must be positive integers", code="invalid")
        return widths


class WidthsListField(forms.Field):
    """Several architectures, given as "64,64,64;32,32" or a list of lists."""

    def to_python(self, value):
        if value in self.empty_values:
            return None
        parts = value if isinstance(value, (list, tuple)) else _split(value, ";")
        return tuple(WidthsField().to_python(part) for part in parts)


class TypedListField(forms.Field):
    def __init__(self, coerce=float, **kwargs):
        self.coerce = coerce
        super().__init__(**kwargs)

    def to_python(self, value):
        if value in self.empty_values:
            return None
        try:
            return tuple(self.coerce(part) for part in _split(value))
        except (TypeError, ValueError):
            raise ValidationError("expected a comma separated list", code="invalid")


class OpenUnitField(forms.FloatField):
    """A float strictly inside (0, 1)."""

    def validate(self, value):
        super().validate(value)
        if value is not None and not 0 < value < 1:
            raise ValidationError("must lie strictly between 0 and 1", code="range")


class TrainingForm(forms.Form):
    tau = OpenUnitField(required=False)
    threshold_arch = WidthsField(required=False)
    gauge_arch = WidthsField(required=False)
    epochs = forms.IntegerField(required=False, min_value=1)
    batch_size = forms.IntegerField(required=False, min_value=1)
    patience = forms.IntegerField(required=False, min_value=1)
    learning_rate = forms.FloatField(required=False, min_value=0)
    l1 = forms.FloatField(required=False, min_value=0)
    l2 = forms.FloatField(required=False, min_value=0)
    validation_fraction = OpenUnitField(required=False)
    seed = forms.IntegerField(required=False, min_value=0)
    penalize_biases = forms.NullBooleanField(required=False)
    refresh_size = forms.IntegerField(required=False, min_value=1)
    refresh_every = forms.IntegerField(required=False, min_value=1)
    reference_size = forms.IntegerField(required=False, min_value=100)
    reference_seed = forms.IntegerField(required=False, min_value=0)

    def clean(self):
        cleaned = super().clean()
        defaults = {
            "tau": settings.GAUGE_TAU,
            "threshold_arch": tuple(settings.GAUGE_THRESHOLD_ARCH),
            "gauge_arch": tuple(settings.GAUGE_ARCH),
            "reference_size": settings.GAUGE_REFERENCE_ANGLES,
            "reference_seed": settings.GAUGE_REFERENCE_SEED,
        }
        defaults.update(settings.GAUGE_TRAINING)
        for key, value in defaults.items():
            if cleaned.get(key) is None:
                cleaned[key] = value
        try:
            cleaned["train_config"] = TrainConfig.from_mapping(cleaned)
        except ConfigurationError as exc:
            raise ValidationError(str(exc))
        return cleaned


class SimulateForm(forms.Form):
    kind = forms.ChoiceField(choices=COPULA_CHOICES)
    dim = forms.IntegerField(min_value=2)
    n = forms.IntegerField(min_value=1)
    seed = forms.IntegerField(min_value=0)
    rho = forms.FloatField(required=False, min_value=-1, max_value=1)
    corr_seed = forms.IntegerField(required=False, min_value=0)
    corr_dmax = forms.IntegerField(required=False, min_value=2)
    nu = forms.FloatField(required=False)
    theta = forms.FloatField(required=False)
    output = forms.CharField()

    def clean(self):
        cleaned = super().clean()
        if self.errors:
            return cleaned
        cleaned["spec"] = build_copula_spec(cleaned)
        return cleaned


def build_copula_spec(cleaned):
    """
    CopulaSpec from validated fields: a nested random correlation matrix when
    ``corr_seed`` is given, an equicorrelation matrix otherwise.
    """
    kind = CopulaKind(cleaned["kind"])
    d = cleaned["dim"]
    corr = None
    if kind is not CopulaKind.LOGISTIC:
        if cleaned.get("corr_seed") is not None:
            d_max = max(cleaned.get("corr_dmax") or 8, d)
            corr = nested_correlation(d_max, cleaned["corr_seed"], d)
        else:
            rho = cleaned.get("rho")
            corr = equicorrelation(d, 0.5 if rho is None else rho)
    try:
        return CopulaSpec(kind, d, corr=corr, nu=cleaned.get("nu"), theta=cleaned.get("theta"))
    except ConfigurationError as exc:
        raise ValidationError(str(exc))


class TransformForm(forms.Form):
    input = forms.CharField()
    output = forms.CharField()
    source = forms.ChoiceField(choices=MARGIN_CHOICES, required=False)
    target = forms.ChoiceField(choices=[c for c in MARGIN_CHOICES if c[0] != MarginTag.RAW.value],
                               required=False, initial=MarginTag.LAPLACE.value)

    def clean_target(self):
        return self.cleaned_data.get("target") or MarginTag.LAPLACE.value


class FitForm(TrainingForm):
    STAGES = (("all", "all"), ("threshold", "threshold"), ("gauge", "gauge"))

    data = forms.CharField()
    output = forms.CharField()
    log = forms.CharField(required=False)
    rank_transform = forms.BooleanField(required=False)
    stage = forms.ChoiceField(choices=STAGES, required=False)
    threshold_model = forms.CharField(required=False)

    def clean(self):
        cleaned = super().clean()
        cleaned["stage"] = cleaned.get("stage") or "all"
        if cleaned["stage"] == "gauge" and not cleaned.get("threshold_model"):
            raise ValidationError("the gauge stage needs --threshold-model from a previous threshold run")
        return cleaned


class InferForm(forms.Form):
    WHAT = (("adf", "adf"), ("probability", "probability"), ("return_level", "return_level"))

    model = forms.CharField()
    queries = forms.CharField()
    output = forms.CharField()
    what = forms.ChoiceField(choices=WHAT)
    data = forms.CharField(required=False)
    q = OpenUnitField(required=False)
    p = OpenUnitField(required=False)

    def clean(self):
        cleaned = super().clean()
        if cleaned.get("q") is None:
            cleaned["q"] = settings.ADF_QUANTILE
        if cleaned.get("what") == "probability" and not cleaned.get("data"):
            raise ValidationError("probability queries need --data")
        if cleaned.get("what") == "return_level" and cleaned.get("p") is None:
            raise ValidationError("return-level queries need --p")
        return cleaned


class DiagnoseForm(forms.Form):
    WHAT = tuple((name, name) for name in ("qq", "adf", "coverage", "slice", "points", "cloud", "validity"))

    model = forms.CharField(required=False)
    data = forms.CharField(required=False)
    output = forms.CharField()
    what = forms.ChoiceField(choices=WHAT)
    angle = TypedListField(required=False)
    q = OpenUnitField(required=False)
    p_grid = TypedListField(required=False)
    pair = TypedListField(coerce=int, required=False)
    epsilon = forms.FloatField(required=False)
    grid = forms.IntegerField(required=False, min_value=1)
    simulations = forms.IntegerField(required=False, min_value=0)
    seed = forms.IntegerField(required=False, min_value=0)

    def clean(self):
        cleaned = super().clean()
        what = cleaned.get("what")
        if what in ("qq", "adf", "coverage", "validity", "slice") and not cleaned.get("model"):
            raise ValidationError(f"--what {what} needs --model")
        if what in ("qq", "adf", "coverage", "points", "cloud") and not cleaned.get("data"):
            raise ValidationError(f"--what {what} needs --data")
        if what == "adf" and not cleaned.get("angle"):
            raise ValidationError("--what adf needs --angle")
        if what in ("slice", "points"):
            pair = cleaned.get("pair") or (1, 2)
            if len(pair) != 2 or pair[0] == pair[1] or min(pair) < 1:
                raise ValidationError("--pair needs two distinct 1-based coordinates")
            cleaned["pair"] = tuple(pair)
        defaults = {
            "q": settings.ADF_QUANTILE,
            "p_grid": tuple(settings.RETURN_LEVEL_GRID),
            "epsilon": settings.SLICE_EPSILON,
            "grid": 360,
            "simulations": settings.QQ_ENVELOPE_SIMULATIONS,
            "seed": 0,
        }
        for key, value in defaults.items():
            if cleaned.get(key) is None:
                cleaned[key] = value
        return cleaned


class BootstrapForm(TrainingForm):
    data = forms.CharField()
    output = forms.CharField()
    block_length = forms.IntegerField(min_value=1)
    replicates = forms.IntegerField(min_value=1)
    queries = forms.CharField(required=False)
    q = OpenUnitField(required=False)
    processes = forms.IntegerField(required=False, min_value=1)

    def clean(self):
        cleaned = super().clean()
        if cleaned.get("q") is None:
            cleaned["q"] = settings.ADF_QUANTILE
        if cleaned.get("block_length"):
            cleaned["plan"] = BlockPlan(cleaned["block_length"], cleaned["seed"])
        return cleaned


class StudyForm(TrainingForm):
    label = forms.CharField(required=False)
    output = forms.CharField()
    copulas = TypedListField(coerce=str, required=False)
    dims = TypedListField(coerce=int, required=False)
    ns = TypedListField(coerce=int, required=False)
    taus = TypedListField(required=False)
    archs = WidthsListField(required=False)
    replicates = forms.IntegerField(required=False, min_value=1)
    corr_seed = forms.IntegerField(required=False, min_value=0)
    corr_dmax = forms.IntegerField(required=False, min_value=2)
    nu = forms.FloatField(required=False)
    theta = forms.FloatField(required=False)
    q = OpenUnitField(required=False)
    processes = forms.IntegerField(required=False, min_value=1)

    def clean(self):
        cleaned = super().clean()
        defaults = {
            "label": "study",
            "copulas": (CopulaKind.GAUSSIAN.value,),
            "dims": (3,),
            "ns": (10_000,),
            "taus": (cleaned.get("tau"),),
            "archs": (cleaned.get("gauge_arch"),),
            "replicates": 1,
            "corr_seed": 0,
            "corr_dmax": 8,
            "nu": 2.0,
            "theta": 0.3,
            "q": settings.ADF_QUANTILE,
            "processes": 1,
        }
        for key, value in defaults.items():
            if cleaned.get(key) is None:
                cleaned[key] = value
        for kind in cleaned["copulas"]:
            if kind not in CopulaKind._value2member_map_:
                raise ValidationError(f"unknown copula {kind!r}")
        if any(d < 2 for d in cleaned["dims"]) or any(n < 2 for n in cleaned["ns"]):
            raise ValidationError("dimensions and sample sizes must be at least 2")
        if any(not 0 < tau < 1 for tau in cleaned["taus"]):
            raise ValidationError("every tau must lie in (0, 1)")
        return cleaned
