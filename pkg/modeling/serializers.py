"""
Serializers for model documents.
LAMeL Toolkit - Modeling Serializers

This module validates serialized models before they are rebuilt:
- Sparse coefficient vectors (size, intercept, index/value entries)
- The versioned meta-model document with its cross-field consistency checks
"""

import math

from rest_framework import serializers

MODEL_DOCUMENT_VERSION = 'lamel-model-v1'


def _finite(value):
    if not math.isfinite(value):
        raise serializers.ValidationError("Value must be finite.")
    return value


class SparseVectorSerializer(serializers.Serializer):
    """Coefficient vector stored as its nonzero entries."""
    size = serializers.IntegerField(min_value=0)
    intercept = serializers.FloatField(validators=[_finite])
    entries = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(validators=[_finite]), min_length=2, max_length=2),
        allow_empty=True,
    )

    def validate(self, attrs):
        seen = set()
        for index, _ in attrs['entries']:
            if index != int(index) or not 0 <= index < attrs['size']:
                raise serializers.ValidationError({'entries': f"Index {index} outside 0..{attrs['size'] - 1}."})
            if index in seen:
                raise serializers.ValidationError({'entries': f"Duplicate index {int(index)}."})
            seen.add(index)
        return attrs


class LambdaRecordSerializer(serializers.Serializer):
    parallel = serializers.FloatField(min_value=0, validators=[_finite])
    perpendicular = serializers.FloatField(min_value=0, validators=[_finite])


class MetaModelDocumentSerializer(serializers.Serializer):
    """
    Serializer for a stored MetaModel.
    Rejects documents whose vector lengths or decomposition disagree.
    """
    version = serializers.ChoiceField(choices=[MODEL_DOCUMENT_VERSION])
    target_id = serializers.CharField(allow_blank=True, default='')
    support_ids = serializers.ListField(child=serializers.CharField(), min_length=1)
    c = serializers.ListField(child=serializers.FloatField(validators=[_finite]))
    lambdas = LambdaRecordSerializer()
    beta_parallel = SparseVectorSerializer()
    beta_perp = SparseVectorSerializer()
    beta_star = SparseVectorSerializer()
    anchored = serializers.BooleanField(default=True)

    def validate(self, attrs):
        if attrs['anchored'] and attrs['lambdas']['parallel'] <= 0:
            raise serializers.ValidationError({'lambdas': "lambda_parallel must be positive."})
        if not attrs['anchored'] and (attrs['beta_parallel']['entries'] or any(attrs['c'])):
            raise serializers.ValidationError(
                {'anchored': "A plain ridge model has zero mixing weights and no parallel component."}
            )
        if len(attrs['c']) != len(attrs['support_ids']):
            raise serializers.ValidationError(
                {'c': f"{len(attrs['c'])} weights for {len(attrs['support_ids'])} support tasks."}
            )
        sizes = {attrs[name]['size'] for name in ('beta_parallel', 'beta_perp', 'beta_star')}
        if len(sizes) != 1:
            raise serializers.ValidationError("Coefficient vectors differ in size.")
        if attrs['beta_parallel']['intercept'] != 0:
            raise serializers.ValidationError({'beta_parallel': "Parallel component carries no intercept."})
        if attrs['beta_star']['intercept'] != attrs['beta_perp']['intercept']:
            raise serializers.ValidationError({'beta_star': "Intercept must equal the perpendicular intercept."})

        combined = {}
        for name in ('beta_parallel', 'beta_perp'):
            for index, value in attrs[name]['entries']:
                combined[int(index)] = combined.get(int(index), 0.0) + value
        stored = {int(index): value for index, value in attrs['beta_star']['entries']}
        for index in set(combined) | set(stored):
            expected, actual = combined.get(index, 0.0), stored.get(index, 0.0)
            if not math.isclose(expected, actual, rel_tol=1e-12, abs_tol=1e-300):
                raise serializers.ValidationError(
                    {'beta_star': f"Entry {index} is not the sum of the parallel and perpendicular parts."}
                )
        return attrs
