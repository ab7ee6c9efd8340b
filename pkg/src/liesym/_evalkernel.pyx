# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Batch interpreter for compiled expression bytecode.

Opcodes match liesym.evaluate: CONST i, VAR i, ADD n, MUL n, POW, FUNC k.
Points are processed in blocks of BLOCK; each instruction runs as a tight
loop over the block, so dispatch cost is paid once per block.
"""

from libc.math cimport exp, log, sqrt, sin, cos, tanh, atan, pow, NAN
from libc.stdlib cimport malloc, free

cdef enum:
    CONST = 0
    VAR = 1
    ADD = 2
    MUL = 3
    POW = 4
    FUNC = 5
    BLOCK = 64


cdef inline double _unary(long long k, double a) nogil:
    if k == 0:
        return exp(a)
    if k == 1:
        return log(a) if a > 0 else NAN
    if k == 2:
        return sqrt(a) if a >= 0 else NAN
    if k == 3:
        return sin(a)
    if k == 4:
        return cos(a)
    if k == 5:
        return tanh(a)
    return atan(a)


def run(const long long[::1] code, const double[::1] consts,
        const double[:, ::1] values, double[::1] out, Py_ssize_t max_stack):
    cdef Py_ssize_t npts = out.shape[0]
    cdef Py_ssize_t ncode = code.shape[0]
    cdef double *stack = <double *> malloc((max_stack + 1) * BLOCK * sizeof(double))
    if stack == NULL:
        raise MemoryError
    cdef double *top
    cdef double *src
    cdef double c
    cdef Py_ssize_t start, nb, pc, sp, j, i
    cdef long long op, arg
    try:
        with nogil:
            start = 0
            while start < npts:
                nb = npts - start
                if nb > BLOCK:
                    nb = BLOCK
                sp = 0
                pc = 0
                while pc < ncode:
                    op = code[pc]
                    arg = code[pc + 1]
                    pc += 2
                    if op == CONST:
                        top = stack + sp * BLOCK
                        c = consts[arg]
                        for i in range(nb):
                            top[i] = c
                        sp += 1
                    elif op == VAR:
                        top = stack + sp * BLOCK
                        for i in range(nb):
                            top[i] = values[arg, start + i]
                        sp += 1
                    elif op == ADD or op == MUL:
                        sp -= arg
                        top = stack + sp * BLOCK
                        for j in range(1, arg):
                            src = stack + (sp + j) * BLOCK
                            if op == ADD:
                                for i in range(nb):
                                    top[i] += src[i]
                            else:
                                for i in range(nb):
                                    top[i] *= src[i]
                        sp += 1
                    elif op == POW:
                        sp -= 1
                        top = stack + (sp - 1) * BLOCK
                        src = stack + sp * BLOCK
                        # integer and half powers dominate; skip the general pow
                        for i in range(nb):
                            c = src[i]
                            if c == 2.0:
                                top[i] = top[i] * top[i]
                            elif c == -1.0:
                                top[i] = 1.0 / top[i]
                            elif c == -2.0:
                                top[i] = 1.0 / (top[i] * top[i])
                            else:
                                top[i] = pow(top[i], c)
                    else:
                        top = stack + (sp - 1) * BLOCK
                        for i in range(nb):
                            top[i] = _unary(arg, top[i])
                for i in range(nb):
                    out[start + i] = stack[i]
                start += nb
    finally:
        free(stack)
