# core/serializers.py
import math

from rest_framework import serializers


def _finite(value):
    """JSON strict : les non-finis deviennent null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    return value


class CheckSerializer(serializers.Serializer):
    id = serializers.CharField(source='check_id')
    lhs = serializers.FloatField(allow_null=True)
    rhs = serializers.FloatField(allow_null=True)
    advisory = serializers.BooleanField()

    def get_fields(self):
        # « pass » est un mot réservé : le champ est ajouté dynamiquement.
        fields = super().get_fields()
        fields['pass'] = serializers.BooleanField(source='passed')
        return fields

    def to_representation(self, instance):
        return _finite(super().to_representation(instance))


class EstimateSerializer(serializers.Serializer):
    id = serializers.CharField(source='estimator_id')
    value = serializers.FloatField()
    se = serializers.FloatField(source='std_error')
    samples = serializers.IntegerField()
    seed = serializers.IntegerField()

    def to_representation(self, instance):
        return _finite(super().to_representation(instance))


class ReportSerializer(serializers.Serializer):
    body = serializers.CharField()
    sequence = serializers.ListField(child=serializers.FloatField())
    wills = serializers.FloatField(allow_null=True)
    delta = serializers.FloatField(allow_null=True)
    variance = serializers.FloatField(allow_null=True)
    entropy = serializers.FloatField(allow_null=True)
    estimates = EstimateSerializer(many=True)
    checks = CheckSerializer(many=True)
    extras = serializers.DictField()

    def to_representation(self, instance):
        return _finite(super().to_representation(instance))
