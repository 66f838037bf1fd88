from rest_framework import serializers

from butcher.serializers import MatrixField
from core.io import to_jsonable
from .tableau import GarkTableau


class GarkTableauSerializer(serializers.Serializer):
    """Blocks stored row-major as nested lists."""

    A_ff = MatrixField()
    A_fs = MatrixField()
    A_sf = MatrixField()
    A_ss = MatrixField()
    b_f = serializers.ListField(child=serializers.FloatField())
    b_s = serializers.ListField(child=serializers.FloatField())
    c_f = serializers.ListField(child=serializers.FloatField())
    c_s = serializers.ListField(child=serializers.FloatField())
    b_f_embedded = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True)
    block_sizes = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False)
    block_widths = serializers.ListField(child=serializers.FloatField(), required=False)
    provenance = serializers.DictField(required=False)

    def to_representation(self, instance: GarkTableau):
        return to_jsonable({
            "A_ff": instance.A_ff,
            "A_fs": instance.A_fs,
            "A_sf": instance.A_sf,
            "A_ss": instance.A_ss,
            "b_f": instance.b_f,
            "b_s": instance.b_s,
            "c_f": instance.c_f,
            "c_s": instance.c_s,
            "b_f_embedded": instance.b_f_embedded,
            "block_sizes": list(instance.block_sizes),
            "block_widths": list(instance.block_widths),
            "provenance": instance.provenance,
        })

    def validate(self, attrs):
        try:
            attrs["tableau"] = GarkTableau(
                A_ff=attrs["A_ff"], A_fs=attrs["A_fs"], A_sf=attrs["A_sf"], A_ss=attrs["A_ss"],
                b_f=attrs["b_f"], b_s=attrs["b_s"], c_f=attrs["c_f"], c_s=attrs["c_s"],
                b_f_embedded=attrs.get("b_f_embedded"),
                block_sizes=tuple(attrs.get("block_sizes", ())),
                block_widths=tuple(attrs.get("block_widths", ())),
                provenance=attrs.get("provenance", {}),
            )
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def create(self, validated_data) -> GarkTableau:
        return validated_data["tableau"]


class ConditionReportSerializer(serializers.Serializer):
    residuals = serializers.DictField(child=serializers.FloatField())
    satisfied_order = serializers.IntegerField()
    v_outer = serializers.ListField(child=serializers.FloatField())
    failing = serializers.ListField(child=serializers.CharField())

    def to_representation(self, instance):
        return to_jsonable({
            "residuals": instance.residuals,
            "satisfied_order": instance.satisfied_order,
            "v_outer": instance.v_outer,
            "failing": instance.failing(),
        })
