"""Regenerates the tiny ONNX fixtures used by the model backend tests.

    python3 make_models.py

The classifier is GlobalAveragePool -> Flatten -> Gemm, so the expected
scores can be recomputed exactly from per-channel means.
"""

import onnx
from onnx import TensorProto, helper

WEIGHTS = [
    [0.5, -0.2, 0.1],
    [-0.3, 0.8, 0.2],
    [0.1, 0.1, 0.9],
]
BIAS = [0.05, -0.1, 0.0]


def build(path, input_name="tiles", output_name="scores", n_out=3):
    w = [row[:] for row in WEIGHTS[:n_out]]
    b = BIAS[:n_out]
    graph = helper.make_graph(
        [
            helper.make_node("GlobalAveragePool", [input_name], ["pooled"]),
            helper.make_node("Flatten", ["pooled"], ["flat"], axis=1),
            helper.make_node("Gemm", ["flat", "w", "b"], [output_name], transB=1),
        ],
        "tile_classifier",
        [helper.make_tensor_value_info(input_name, TensorProto.FLOAT, ["N", 3, 28, 168])],
        [helper.make_tensor_value_info(output_name, TensorProto.FLOAT, ["N", n_out])],
        initializer=[
            helper.make_tensor("w", TensorProto.FLOAT, [n_out, 3], sum(w, [])),
            helper.make_tensor("b", TensorProto.FLOAT, [n_out], b),
        ],
    )
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 13)])
    model.ir_version = 8
    onnx.checker.check_model(model)
    onnx.save(model, path)


if __name__ == "__main__":
    build("tiny_tile_classifier.onnx")
    build("two_outputs.onnx", n_out=2)
    build("wrong_io_names.onnx", input_name="input", output_name="logits")
