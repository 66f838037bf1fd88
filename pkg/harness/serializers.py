from rest_framework import serializers

from core.io import to_jsonable


class ConvergenceReportSerializer(serializers.Serializer):
    """JSON sidecar of a convergence study; NaN/inf are written as strings."""

    def to_representation(self, instance):
        return to_jsonable({
            "method": instance.method,
            "problem": instance.problem,
            "m": instance.m,
            "h_values": instance.h_values,
            "rms_errors": instance.rms_errors,
            "total_calls": instance.total_calls,
            "steps": instance.steps,
            "fit_window": list(instance.fit_window),
            "fitted_order": instance.fitted_order,
            "reference": instance.reference,
        })


class HarnessConfigSerializer(serializers.Serializer):
    """
    Keys accepted in a ``--config`` JSON file. Command-line flags win over
    these values, which win over settings.
    """

    method = serializers.CharField(required=False)
    methods = serializers.ListField(child=serializers.CharField(), required=False)
    problem = serializers.CharField(required=False)
    h = serializers.ListField(child=serializers.FloatField(min_value=0.0), required=False)
    m = serializers.IntegerField(min_value=1, required=False)
    subcycles = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False)
    kappa = serializers.FloatField(required=False)
    outer = serializers.CharField(required=False)
    inner = serializers.CharField(required=False)
    include_collapsed = serializers.BooleanField(required=False)
    out = serializers.CharField(required=False)
    refcache = serializers.CharField(required=False)
    ref_tol = serializers.FloatField(min_value=0.0, required=False)
    overrides = serializers.DictField(required=False)

    def validate_kappa(self, value):
        if not value > 0.0:
            raise serializers.ValidationError("kappa must be positive")
        return value
