"""Regenerates the ONNX fixtures under tests/fixtures/models.

constant_half.onnx  zero-weight 1x1 conv + sigmoid: 0.5 everywhere.
wrong_side_256.onnx same graph declared at 256x256 (signature mismatch).
tiny_unet.onnx      small encoder/decoder (conv, pool, upsample, skip concat,
                    sigmoid) with seeded random weights.

All models use opset 11 and the `input` / `prob` tensor names.
"""
import pathlib

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

OPSET = 11
OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "models"


def io(side):
    shape = ["N", 1, side, side]
    return (helper.make_tensor_value_info("input", TensorProto.FLOAT, shape),
            helper.make_tensor_value_info("prob", TensorProto.FLOAT, shape))


def save(graph, name):
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", OPSET)],
                              producer_name="inscribin-fixtures")
    model.ir_version = 6
    onnx.checker.check_model(model)
    onnx.save(model, str(OUT / name))


def constant(side, name):
    inp, out = io(side)
    w = numpy_helper.from_array(np.zeros((1, 1, 1, 1), np.float32), "w")
    b = numpy_helper.from_array(np.zeros((1,), np.float32), "b")
    nodes = [helper.make_node("Conv", ["input", "w", "b"], ["logit"], kernel_shape=[1, 1]),
             helper.make_node("Sigmoid", ["logit"], ["prob"])]
    save(helper.make_graph(nodes, name, [inp], [out], [w, b]), f"{name}.onnx")


def tiny_unet():
    rng = np.random.default_rng(7)
    inp, out = io(512)

    def conv(name, cin, cout):
        w = rng.normal(0, 0.5, (cout, cin, 3, 3)).astype(np.float32)
        b = rng.normal(0, 0.1, (cout,)).astype(np.float32)
        return [numpy_helper.from_array(w, f"{name}_w"), numpy_helper.from_array(b, f"{name}_b")]

    inits = conv("enc", 1, 4) + conv("mid", 4, 4) + conv("dec", 8, 1)
    scales = numpy_helper.from_array(np.array([1, 1, 2, 2], np.float32), "scales")
    roi = numpy_helper.from_array(np.array([], np.float32), "roi")
    inits += [scales, roi]
    pads = [1, 1, 1, 1]
    nodes = [
        helper.make_node("Conv", ["input", "enc_w", "enc_b"], ["e"], kernel_shape=[3, 3], pads=pads),
        helper.make_node("Relu", ["e"], ["e_r"]),
        helper.make_node("MaxPool", ["e_r"], ["p"], kernel_shape=[2, 2], strides=[2, 2]),
        helper.make_node("Conv", ["p", "mid_w", "mid_b"], ["m"], kernel_shape=[3, 3], pads=pads),
        helper.make_node("Relu", ["m"], ["m_r"]),
        helper.make_node("Resize", ["m_r", "roi", "scales"], ["u"], mode="nearest"),
        helper.make_node("Concat", ["e_r", "u"], ["cat"], axis=1),
        helper.make_node("Conv", ["cat", "dec_w", "dec_b"], ["logit"], kernel_shape=[3, 3], pads=pads),
        helper.make_node("Sigmoid", ["logit"], ["prob"]),
    ]
    save(helper.make_graph(nodes, "tiny_unet", [inp], [out], inits), "tiny_unet.onnx")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    constant(512, "constant_half")
    constant(256, "wrong_side_256")
    tiny_unet()
    (OUT / "not_a_model.onnx").write_bytes(b"this is not a protobuf model\n")
