from rest_framework import serializers

from core.io import to_jsonable
from .scan import StabilityScan


class StabilityParametersSerializer(serializers.Serializer):
    """Validates a (kappa, xi, eta) triple from JSON input."""

    kappa = serializers.FloatField()
    xi = serializers.FloatField(min_value=-1.0, max_value=0.0)
    eta = serializers.FloatField(min_value=-1.0, max_value=1.0)

    def validate(self, attrs):
        if not attrs["kappa"] > 0.0:
            raise serializers.ValidationError({"kappa": "must be positive"})
        if attrs["xi"] in (-1.0, 0.0):
            raise serializers.ValidationError({"xi": "must lie strictly inside (-1, 0)"})
        if attrs["eta"] in (-1.0, 1.0):
            raise serializers.ValidationError({"eta": "must lie strictly inside (-1, 1)"})
        return attrs


class StabilityScanSummarySerializer(serializers.Serializer):
    """Summary written next to the CSV/SVG exports; grids are left to the CSV."""

    def to_representation(self, instance: StabilityScan):
        return to_jsonable({
            "method": instance.method,
            "kappa": instance.kappa,
            "n_xi": len(instance.xi_grid),
            "n_eta": len(instance.eta_grid),
            "stable_cells": int(instance.stable.sum()),
            "area_fraction": instance.area_fraction,
            "meta": instance.meta,
        })
