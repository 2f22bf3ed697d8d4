/**
 * AdamW with decoupled weight decay.
 *
 * Decay multiplies the parameter directly by (1 - lr * wd) each step and
 * never enters the moment estimates, so wd = 0 reduces exactly to Adam.
 */
import { Mat } from "./tensor.js";

export class AdamW {
  private readonly params: Mat[];
  private readonly m: Float64Array[];
  private readonly v: Float64Array[];
  private t = 0;

  constructor(
    params: Mat[],
    readonly lr: number,
    readonly weightDecay = 0,
    readonly beta1 = 0.9,
    readonly beta2 = 0.999,
    readonly eps = 1e-8,
  ) {
    for (const p of params) {
      if (!p.grad) throw new Error("optimizer given a parameter without a gradient buffer");
    }
    this.params = params;
    this.m = params.map((p) => new Float64Array(p.size));
    this.v = params.map((p) => new Float64Array(p.size));
  }

  step(): void {
    this.t += 1;
    const bc1 = 1 - Math.pow(this.beta1, this.t);
    const bc2 = 1 - Math.pow(this.beta2, this.t);
    for (let k = 0; k < this.params.length; k++) {
      const p = this.params[k];
      const g = p.grad!;
      const m = this.m[k];
      const v = this.v[k];
      for (let i = 0; i < p.size; i++) {
        if (this.weightDecay > 0) p.data[i] -= this.lr * this.weightDecay * p.data[i];
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
        const mHat = m[i] / bc1;
        const vHat = v[i] / bc2;
        p.data[i] -= (this.lr * mHat) / (Math.sqrt(vHat) + this.eps);
      }
    }
  }

  zeroGrad(): void {
    for (const p of this.params) p.zeroGrad();
  }
}
