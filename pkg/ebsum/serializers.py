# ebsum/serializers.py
import copy
import math
from fractions import Fraction

import numpy as np
from rest_framework import serializers

from .ebs_core import Profile, TailKind
from .exceptions import InvalidArgument


class ParameterField(serializers.Field):
    """Read-only number that may be an exact Fraction or infinite.

    Fractions render as "a/b" strings, integers stay integers and infinities
    render as "inf" so strict JSON output stays valid.
    """

    def __init__(self, **kwargs):
        kwargs["read_only"] = True
        super().__init__(**kwargs)

    def to_representation(self, value):
        if isinstance(value, Fraction):
            return value.numerator if value.denominator == 1 else str(value)
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return int(value)
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value


class EnumChoiceField(serializers.ChoiceField):
    """Choice among the values of a str enum; reads and writes enum members."""

    def __init__(self, enum_cls, **kwargs):
        self.enum_cls = enum_cls
        super().__init__(choices=[member.value for member in enum_cls], **kwargs)

    def to_internal_value(self, data):
        return self.enum_cls(super().to_internal_value(data))

    def to_representation(self, value):
        return self.enum_cls(value).value


class KeywordFieldsMixin:
    """Adds fields whose names are Python keywords ("lambda", "pass")."""

    keyword_fields = {}
    keyword_fields_first = False

    def get_fields(self):
        fields = super().get_fields()
        extra = {name: copy.deepcopy(field) for name, field in self.keyword_fields.items()}
        if self.keyword_fields_first:
            return {**extra, **fields}
        fields.update(extra)
        return fields


class ProfileSerializer(KeywordFieldsMixin, serializers.Serializer):
    keyword_fields = {"lambda": serializers.FloatField(source="lam", min_value=0.0, default=0.0)}
    keyword_fields_first = True

    probs = serializers.ListField(
        child=serializers.FloatField(min_value=0.0, max_value=1.0), default=list,
    )
    tail_mass = serializers.FloatField(min_value=0.0, default=0.0)
    tail_kind = EnumChoiceField(
        TailKind, default=TailKind.OMITTED_MASS,
        help_text="omitted-mass: sum of the cut success probabilities; "
                  "total-variation: bound on the error of replacing the cut terms",
    )

    def validate(self, data):
        try:
            Profile(
                lam=data["lam"], probs=tuple(data["probs"]),
                tail_mass=data["tail_mass"], tail_kind=data["tail_kind"],
            )
        except InvalidArgument as exc:
            raise serializers.ValidationError(str(exc))
        return data

    def create(self, validated_data):
        return Profile(
            lam=validated_data["lam"],
            probs=tuple(validated_data["probs"]),
            tail_mass=validated_data["tail_mass"],
            tail_kind=validated_data["tail_kind"],
        )


class PmfSerializer(serializers.Serializer):
    shift = serializers.IntegerField()
    trunc_err = serializers.FloatField()
    mass = serializers.ListField(child=serializers.FloatField())


class ModeSummarySerializer(serializers.Serializer):
    m_minus = serializers.IntegerField()
    m_plus = serializers.IntegerField()
    modes = serializers.ListField(child=serializers.IntegerField())
    peak = serializers.FloatField()
    twin = serializers.BooleanField()
    skewness = serializers.FloatField()
    degenerate = serializers.BooleanField()


class MedianIntervalSerializer(serializers.Serializer):
    lo = serializers.IntegerField()
    hi = serializers.IntegerField()


class FamilySpecSerializer(serializers.Serializer):
    """Tagged form {"family": tag, "parameter": name, "params": {...}}."""

    family = serializers.CharField(source="tag")
    parameter = serializers.CharField()
    params = serializers.SerializerMethodField()

    def get_params(self, obj):
        if hasattr(obj, "params"):
            params = dict(obj.params)
        else:
            names = ("p", "n", "t", "n_max")
            params = {name: getattr(obj, name) for name in names if hasattr(obj, name)}
        base = params.pop("base", getattr(obj, "base", None))
        out = {name: ParameterField().to_representation(value) for name, value in params.items()}
        if base is not None:
            out["base"] = ProfileSerializer(base).data
        return out


class CrossModalEntrySerializer(KeywordFieldsMixin, serializers.Serializer):
    keyword_fields = {"pass": serializers.BooleanField(source="passed")}

    k = serializers.IntegerField()
    ell_lo = ParameterField()
    ell_hi = ParameterField()
    m_lo = serializers.IntegerField()
    m_hi = serializers.IntegerField()


class CrossModalReportSerializer(serializers.Serializer):
    entries = CrossModalEntrySerializer(many=True)
    conditions = serializers.DictField(child=serializers.BooleanField())
    all_pass = serializers.BooleanField()
    unanimous = serializers.BooleanField()


class DarrochVerdictSerializer(KeywordFieldsMixin, serializers.Serializer):
    keyword_fields = {"pass": serializers.BooleanField(source="passed")}

    mu = serializers.FloatField()
    m_minus = serializers.IntegerField()
    m_plus = serializers.IntegerField()
    classification = serializers.CharField(source="classification.value")
    detail = serializers.CharField(allow_blank=True)


class TransportPlanSerializer(serializers.Serializer):
    kind = serializers.CharField(source="kind.value")
    mode = serializers.IntegerField()
    cost = ParameterField()
    s = serializers.IntegerField(allow_null=True)
    delta = serializers.FloatField(allow_null=True)
    gamma = serializers.FloatField(allow_null=True)
    alphas = serializers.ListField(child=serializers.FloatField())
    rate = serializers.FloatField(allow_null=True)
    residual = serializers.FloatField()


class CaseResultSerializer(KeywordFieldsMixin, serializers.Serializer):
    keyword_fields = {"pass": serializers.BooleanField(source="passed")}

    seed = serializers.IntegerField()
    case = serializers.IntegerField()
    profile_hash = serializers.CharField()
    mu = serializers.FloatField()
    m_minus = serializers.IntegerField()
    m_plus = serializers.IntegerField()
    detail = serializers.CharField(allow_blank=True)


class RidgeRowSerializer(serializers.Serializer):
    parameter = ParameterField()
    mean = serializers.FloatField()
    m_minus = serializers.IntegerField()
    m_plus = serializers.IntegerField()
    peak = serializers.FloatField()
    ell_lo = ParameterField()
    ell_hi = ParameterField()
