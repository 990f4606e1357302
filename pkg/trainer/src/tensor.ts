/**
 * Minimal tape-based autograd over row-major Float64Array matrices.
 *
 * Forward ops record a backward closure on the tape; `backward(loss)` seeds
 * d(loss)=1 and replays the tape in reverse. Only the op set the GRU
 * encoder-decoder needs is implemented.
 */

export class Tensor {
  rows: number;
  cols: number;
  data: Float64Array;
  grad: Float64Array | null = null;
  requiresGrad: boolean;

  constructor(rows: number, cols: number, data?: Float64Array, requiresGrad = false) {
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float64Array(rows * cols);
    this.requiresGrad = requiresGrad;
    if (requiresGrad) this.grad = new Float64Array(rows * cols);
  }

  get size(): number {
    return this.rows * this.cols;
  }

  static zeros(rows: number, cols: number, requiresGrad = false): Tensor {
    return new Tensor(rows, cols, undefined, requiresGrad);
  }

  static fromArray(rows: number, cols: number, values: ArrayLike<number>): Tensor {
    return new Tensor(rows, cols, Float64Array.from(values));
  }
}

type BackwardFn = () => void;

export class Tape {
  private ops: BackwardFn[] = [];
  active = true;

  record(fn: BackwardFn): void {
    if (this.active) this.ops.push(fn);
  }

  backward(loss: Tensor): void {
    if (loss.size !== 1) throw new Error("backward() expects a scalar loss");
    ensureGrad(loss);
    loss.grad![0] = 1.0;
    for (let i = this.ops.length - 1; i >= 0; i--) this.ops[i]();
    this.ops.length = 0;
  }

  /** Drop recorded ops without running them (inference). */
  discard(): void {
    this.ops.length = 0;
  }
}

function ensureGrad(t: Tensor): void {
  if (t.grad === null) t.grad = new Float64Array(t.size);
}

function out(tape: Tape, rows: number, cols: number): Tensor {
  const t = new Tensor(rows, cols);
  ensureGrad(t);
  return t;
}

/** C[m,n] = A[m,k] @ B[k,n] */
export function matmul(tape: Tape, a: Tensor, b: Tensor): Tensor {
  if (a.cols !== b.rows) throw new Error(`matmul shape ${a.rows}x${a.cols} @ ${b.rows}x${b.cols}`);
  const m = a.rows, k = a.cols, n = b.cols;
  const c = out(tape, m, n);
  const ad = a.data, bd = b.data, cd = c.data;
  for (let i = 0; i < m; i++) {
    const arow = i * k;
    const crow = i * n;
    for (let p = 0; p < k; p++) {
      const av = ad[arow + p];
      if (av === 0) continue;
      const brow = p * n;
      for (let j = 0; j < n; j++) cd[crow + j] += av * bd[brow + j];
    }
  }
  tape.record(() => {
    const cg = c.grad!;
    if (a.requiresGrad || a.grad) {
      ensureGrad(a);
      const ag = a.grad!;
      for (let i = 0; i < m; i++) {
        for (let p = 0; p < k; p++) {
          let sum = 0;
          const brow = p * n, crow = i * n;
          for (let j = 0; j < n; j++) sum += cg[crow + j] * bd[brow + j];
          ag[i * k + p] += sum;
        }
      }
    }
    if (b.requiresGrad || b.grad) {
      ensureGrad(b);
      const bg = b.grad!;
      for (let p = 0; p < k; p++) {
        const brow = p * n;
        for (let i = 0; i < m; i++) {
          const av = ad[i * k + p];
          if (av === 0) continue;
          const crow = i * n;
          for (let j = 0; j < n; j++) bg[brow + j] += av * cg[crow + j];
        }
      }
    }
  });
  return c;
}

/** C[m,n] = A[m,k] @ B[n,k]^T without materializing the transpose. */
export function matmulBT(tape: Tape, a: Tensor, b: Tensor): Tensor {
  if (a.cols !== b.cols) throw new Error(`matmulBT shape ${a.rows}x${a.cols} @ (${b.rows}x${b.cols})^T`);
  const m = a.rows, k = a.cols, n = b.rows;
  const c = out(tape, m, n);
  for (let i = 0; i < m; i++) {
    const arow = i * k;
    for (let j = 0; j < n; j++) {
      const brow = j * k;
      let sum = 0;
      for (let p = 0; p < k; p++) sum += a.data[arow + p] * b.data[brow + p];
      c.data[i * n + j] = sum;
    }
  }
  tape.record(() => {
    const cg = c.grad!;
    ensureGrad(a);
    ensureGrad(b);
    for (let i = 0; i < m; i++) {
      for (let j = 0; j < n; j++) {
        const g = cg[i * n + j];
        if (g === 0) continue;
        const arow = i * k;
        const brow = j * k;
        for (let p = 0; p < k; p++) {
          a.grad![arow + p] += g * b.data[brow + p];
          b.grad![brow + p] += g * a.data[arow + p];
        }
      }
    }
  });
  return c;
}

export function add(tape: Tape, a: Tensor, b: Tensor): Tensor {
  if (a.rows !== b.rows || a.cols !== b.cols) throw new Error("add shape mismatch");
  const c = out(tape, a.rows, a.cols);
  for (let i = 0; i < c.size; i++) c.data[i] = a.data[i] + b.data[i];
  tape.record(() => {
    const cg = c.grad!;
    ensureGrad(a);
    ensureGrad(b);
    for (let i = 0; i < c.size; i++) {
      a.grad![i] += cg[i];
      b.grad![i] += cg[i];
    }
  });
  return c;
}

/** Broadcast-add a 1xN bias to every row. */
export function addBias(tape: Tape, a: Tensor, bias: Tensor): Tensor {
  if (bias.rows !== 1 || bias.cols !== a.cols) throw new Error("bias shape mismatch");
  const c = out(tape, a.rows, a.cols);
  for (let i = 0; i < a.rows; i++)
    for (let j = 0; j < a.cols; j++) c.data[i * a.cols + j] = a.data[i * a.cols + j] + bias.data[j];
  tape.record(() => {
    const cg = c.grad!;
    ensureGrad(a);
    ensureGrad(bias);
    for (let i = 0; i < a.rows; i++)
      for (let j = 0; j < a.cols; j++) {
        a.grad![i * a.cols + j] += cg[i * a.cols + j];
        bias.grad![j] += cg[i * a.cols + j];
      }
  });
  return c;
}

export function mul(tape: Tape, a: Tensor, b: Tensor): Tensor {
  if (a.size !== b.size) throw new Error("mul shape mismatch");
  const c = out(tape, a.rows, a.cols);
  for (let i = 0; i < c.size; i++) c.data[i] = a.data[i] * b.data[i];
  tape.record(() => {
    const cg = c.grad!;
    ensureGrad(a);
    ensureGrad(b);
    for (let i = 0; i < c.size; i++) {
      a.grad![i] += cg[i] * b.data[i];
      b.grad![i] += cg[i] * a.data[i];
    }
  });
  return c;
}

/** Elementwise y = scale*x + shift. */
export function affine(tape: Tape, a: Tensor, scale: number, shift: number): Tensor {
  const c = out(tape, a.rows, a.cols);
  for (let i = 0; i < c.size; i++) c.data[i] = scale * a.data[i] + shift;
  tape.record(() => {
    ensureGrad(a);
    for (let i = 0; i < c.size; i++) a.grad![i] += scale * c.grad![i];
  });
  return c;
}

export function sigmoid(tape: Tape, a: Tensor): Tensor {
  const c = out(tape, a.rows, a.cols);
  for (let i = 0; i < c.size; i++) c.data[i] = 1 / (1 + Math.exp(-a.data[i]));
  tape.record(() => {
    ensureGrad(a);
    for (let i = 0; i < c.size; i++) a.grad![i] += c.grad![i] * c.data[i] * (1 - c.data[i]);
  });
  return c;
}

export function tanh(tape: Tape, a: Tensor): Tensor {
  const c = out(tape, a.rows, a.cols);
  for (let i = 0; i < c.size; i++) c.data[i] = Math.tanh(a.data[i]);
  tape.record(() => {
    ensureGrad(a);
    for (let i = 0; i < c.size; i++) a.grad![i] += c.grad![i] * (1 - c.data[i] * c.data[i]);
  });
  return c;
}

/** Concatenate two row vectors (1xA, 1xB) -> 1x(A+B). */
export function concatCols(tape: Tape, a: Tensor, b: Tensor): Tensor {
  if (a.rows !== 1 || b.rows !== 1) throw new Error("concatCols expects row vectors");
  const c = out(tape, 1, a.cols + b.cols);
  c.data.set(a.data, 0);
  c.data.set(b.data, a.cols);
  tape.record(() => {
    ensureGrad(a);
    ensureGrad(b);
    for (let i = 0; i < a.cols; i++) a.grad![i] += c.grad![i];
    for (let i = 0; i < b.cols; i++) b.grad![i] += c.grad![a.cols + i];
  });
  return c;
}

/** Stack T row vectors (each 1xN) into a TxN matrix. */
export function stackRows(tape: Tape, rows: Tensor[]): Tensor {
  const n = rows[0].cols;
  const c = out(tape, rows.length, n);
  rows.forEach((r, i) => {
    if (r.rows !== 1 || r.cols !== n) throw new Error("stackRows shape mismatch");
    c.data.set(r.data, i * n);
  });
  tape.record(() => {
    rows.forEach((r, i) => {
      ensureGrad(r);
      for (let j = 0; j < n; j++) r.grad![j] += c.grad![i * n + j];
    });
  });
  return c;
}

export function transpose(tape: Tape, a: Tensor): Tensor {
  const c = out(tape, a.cols, a.rows);
  for (let i = 0; i < a.rows; i++)
    for (let j = 0; j < a.cols; j++) c.data[j * a.rows + i] = a.data[i * a.cols + j];
  tape.record(() => {
    ensureGrad(a);
    for (let i = 0; i < a.rows; i++)
      for (let j = 0; j < a.cols; j++) a.grad![i * a.cols + j] += c.grad![j * a.rows + i];
  });
  return c;
}

/** Softmax over a Tx1 column (attention weights). */
export function softmaxCol(tape: Tape, a: Tensor): Tensor {
  if (a.cols !== 1) throw new Error("softmaxCol expects a column vector");
  const c = out(tape, a.rows, 1);
  let max = -Infinity;
  for (let i = 0; i < a.rows; i++) max = Math.max(max, a.data[i]);
  let sum = 0;
  for (let i = 0; i < a.rows; i++) {
    c.data[i] = Math.exp(a.data[i] - max);
    sum += c.data[i];
  }
  for (let i = 0; i < a.rows; i++) c.data[i] /= sum;
  tape.record(() => {
    ensureGrad(a);
    let dot = 0;
    for (let i = 0; i < a.rows; i++) dot += c.grad![i] * c.data[i];
    for (let i = 0; i < a.rows; i++) a.grad![i] += c.data[i] * (c.grad![i] - dot);
  });
  return c;
}

/** Pick row `idx` of an embedding matrix as a 1xN tensor (grad scatters back). */
export function gatherRow(tape: Tape, table: Tensor, idx: number): Tensor {
  const n = table.cols;
  const c = out(tape, 1, n);
  c.data.set(table.data.subarray(idx * n, (idx + 1) * n));
  tape.record(() => {
    ensureGrad(table);
    for (let j = 0; j < n; j++) table.grad![idx * n + j] += c.grad![j];
  });
  return c;
}

/**
 * Cross-entropy of a 1xV logits row against a target index; returns a scalar
 * loss tensor. Numerically stable log-softmax.
 */
export function crossEntropy(tape: Tape, logits: Tensor, target: number): Tensor {
  const v = logits.cols;
  let max = -Infinity;
  for (let j = 0; j < v; j++) max = Math.max(max, logits.data[j]);
  let sum = 0;
  for (let j = 0; j < v; j++) sum += Math.exp(logits.data[j] - max);
  const logZ = max + Math.log(sum);
  const loss = out(tape, 1, 1);
  loss.data[0] = logZ - logits.data[target];
  tape.record(() => {
    ensureGrad(logits);
    const g = loss.grad![0];
    for (let j = 0; j < v; j++) {
      const softmax = Math.exp(logits.data[j] - logZ);
      logits.grad![j] += g * (softmax - (j === target ? 1 : 0));
    }
  });
  return loss;
}

export function addScalars(tape: Tape, scalars: Tensor[]): Tensor {
  const c = out(tape, 1, 1);
  for (const s of scalars) c.data[0] += s.data[0];
  tape.record(() => {
    for (const s of scalars) {
      ensureGrad(s);
      s.grad![0] += c.grad![0];
    }
  });
  return c;
}

export function scaleScalar(tape: Tape, s: Tensor, factor: number): Tensor {
  return affine(tape, s, factor, 0);
}
