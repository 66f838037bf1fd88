from rest_framework import serializers

from .conditions import classical_order
from .exceptions import InvalidTable
from .tables import ButcherTable


class MatrixField(serializers.ListField):
    child = serializers.ListField(child=serializers.FloatField())


class ButcherTableSerializer(serializers.Serializer):
    """JSON form of a Butcher table: {name, A, b, c, order}."""

    name = serializers.CharField(required=False, allow_blank=True, default="")
    A = MatrixField()
    b = serializers.ListField(child=serializers.FloatField(), min_length=1)
    c = serializers.ListField(child=serializers.FloatField(), min_length=1)
    order = serializers.IntegerField(read_only=True)

    def to_representation(self, instance: ButcherTable):
        return {
            "name": instance.name,
            "A": instance.A.tolist(),
            "b": instance.b.tolist(),
            "c": instance.c.tolist(),
            "order": classical_order(instance),
        }

    def validate(self, attrs):
        s = len(attrs["b"])
        if len(attrs["c"]) != s or len(attrs["A"]) != s or any(len(row) != s for row in attrs["A"]):
            raise serializers.ValidationError(f"A, b and c must describe {s} stages")
        try:
            attrs["table"] = ButcherTable(
                A=attrs["A"], b=attrs["b"], c=attrs["c"], name=attrs.get("name", "")
            )
        except InvalidTable as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def create(self, validated_data) -> ButcherTable:
        return validated_data["table"]
