"""Short-block regular LDPC code: construction, encoding, box-plus SPA
decoding with quasi-uniform message quantization, and adaptive LLR
scaling."""

from .code import LdpcCode, construct_code, encode, load_alist, save_alist
from .decoder import DecodeResult, box_plus, cn_update, spa_decode, vn_update
from .quantizer import QuantizerParams, quasi_uniform_quantize
from .scaling import ScalingState, offline_scaling_train, online_scaling

__all__ = [
    "LdpcCode",
    "construct_code",
    "encode",
    "load_alist",
    "save_alist",
    "DecodeResult",
    "box_plus",
    "cn_update",
    "vn_update",
    "spa_decode",
    "QuantizerParams",
    "quasi_uniform_quantize",
    "ScalingState",
    "offline_scaling_train",
    "online_scaling",
]
