# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled raster kernels: bit-identical to the numpy fallback."""

import numpy as np

cimport numpy as cnp


def blend_select(const unsigned char[:, :, ::1] base,
                 const unsigned char[:, :, ::1] edited,
                 const unsigned char[:, ::1] mask):
    cdef Py_ssize_t h = base.shape[0], w = base.shape[1]
    cdef Py_ssize_t i, j, c
    out_arr = np.empty((h, w, 4), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    with nogil:
        for i in range(h):
            for j in range(w):
                if mask[i, j]:
                    for c in range(4):
                        out[i, j, c] = edited[i, j, c]
                else:
                    for c in range(4):
                        out[i, j, c] = base[i, j, c]
    return out_arr


def dilate_binary(const unsigned char[:, ::1] values, int radius):
    cdef Py_ssize_t h = values.shape[0], w = values.shape[1]
    cdef Py_ssize_t i, j, k, lo, hi
    if radius == 0:
        return np.array(values, dtype=np.uint8)
    horiz_arr = np.zeros((h, w), dtype=np.uint8)
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] horiz = horiz_arr
    cdef unsigned char[:, ::1] out = out_arr
    with nogil:
        for i in range(h):
            for j in range(w):
                lo = j - radius if j - radius > 0 else 0
                hi = j + radius + 1 if j + radius + 1 < w else w
                for k in range(lo, hi):
                    if values[i, k]:
                        horiz[i, j] = 1
                        break
        for i in range(h):
            for j in range(w):
                lo = i - radius if i - radius > 0 else 0
                hi = i + radius + 1 if i + radius + 1 < h else h
                for k in range(lo, hi):
                    if horiz[k, j]:
                        out[i, j] = 1
                        break
    return out_arr


def iou_counts(const unsigned char[:, ::1] a, const unsigned char[:, ::1] b):
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1]
    cdef Py_ssize_t i, j
    cdef long long inter = 0, union_ = 0
    with nogil:
        for i in range(h):
            for j in range(w):
                if a[i, j] and b[i, j]:
                    inter += 1
                if a[i, j] or b[i, j]:
                    union_ += 1
    return int(inter), int(union_)


def source_over(const unsigned char[:, :, ::1] dst,
                const unsigned char[:, :, ::1] src):
    cdef Py_ssize_t h = dst.shape[0], w = dst.shape[1]
    cdef Py_ssize_t i, j, c
    cdef long sa, da, da_t, den, num
    out_arr = np.empty((h, w, 4), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    with nogil:
        for i in range(h):
            for j in range(w):
                sa = src[i, j, 3]
                da = dst[i, j, 3]
                da_t = da * (255 - sa)
                den = sa * 255 + da_t
                out[i, j, 3] = <unsigned char>(sa + (da_t + 127) // 255)
                if den == 0:
                    out[i, j, 0] = 0
                    out[i, j, 1] = 0
                    out[i, j, 2] = 0
                else:
                    for c in range(3):
                        num = src[i, j, c] * sa * 255 + dst[i, j, c] * da_t
                        out[i, j, c] = <unsigned char>((num + den // 2) // den)
    return out_arr
