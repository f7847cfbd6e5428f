"""JSON array schema shared by instances, graphs and checkpoints.

An array is stored as ``{"shape": [...], "dtype": ..., "data": [...]}`` with
``data`` flat in row-major order.  Complex entries are ``[re, im]`` pairs.
Python's float repr round-trips float64 exactly, so encode/decode is
bit-exact.
"""

import json

import numpy as np


def encode_array(arr) -> dict:
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        flat = arr.reshape(-1)
        data = [[float(z.real), float(z.imag)] for z in flat]
        dtype = "complex128"
    elif arr.dtype == bool:
        data = [bool(x) for x in arr.reshape(-1)]
        dtype = "bool"
    else:
        data = [float(x) for x in arr.reshape(-1)]
        dtype = "float64"
    return {"shape": list(arr.shape), "dtype": dtype, "data": data}


def decode_array(obj: dict) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in obj["shape"])
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed array record: {exc}") from None
    dtype = obj.get("dtype", "float64")
    if dtype == "complex128":
        pairs = np.asarray(data, dtype=np.float64).reshape(-1, 2) if data else np.zeros((0, 2))
        arr = pairs[:, 0] + 1j * pairs[:, 1]
    elif dtype == "bool":
        arr = np.asarray(data, dtype=bool)
    else:
        arr = np.asarray(data, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise ValueError(f"array data has {arr.size} entries but shape {shape}")
    return arr.reshape(shape)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def loads(text: str):
    return json.loads(text)
