/**
 * Typed bindings over the pcdist CLI: distance evaluation, loss with
 * gradients, and guided down-sampling on flat numeric buffers.
 *
 * Results are numerically identical to the core library: cloud coordinates
 * travel as shortest round-trip decimal text and results come back as
 * full-precision JSON.
 */

import { writeFile, readFile } from "node:fs/promises";
import { join } from "node:path";

import {
  BufferValidationError,
  cloudToXyz,
  pointCount,
  validateCloudBuffer,
  xyzToCloud,
} from "./buffers";
import { CliError, runCli, withScratchDir } from "./runner";

export {
  BufferValidationError,
  CliError,
  cloudToXyz,
  validateCloudBuffer,
  xyzToCloud,
};

export type MetricName = "cd_t" | "cd_p" | "hd" | "dcd" | "emd" | "emd_exact";
export type LossName = "cd-t" | "cd-p" | "dcd";

export interface MetricOptions {
  /** Temperature of the density-aware exponential (default 1000). */
  alpha?: number;
  /** Query-frequency exponent in [0, 1] (default 1). */
  lambda?: number;
  /** "squared" (default) or "euclidean" exponent argument. */
  exponentMode?: "squared" | "euclidean";
  /** Unequal-size density-aware variant; required when point counts differ. */
  variant?: "naive" | "e";
  /** Auction epsilon for the approximate Earth Mover's Distance. */
  epsilon?: number;
  /** Bidding-round cap for the auction solver. */
  maxIters?: number;
  /** "mean" (default) or "sum" normalization for EMD values. */
  emdNormalize?: "mean" | "sum";
  /** Also return per-point contribution arrays. */
  perPoint?: boolean;
}

export interface PerPoint {
  src: Float64Array;
  tgt: Float64Array;
}

export interface DistanceResult {
  values: Partial<Record<MetricName, number>>;
  perPoint?: Partial<Record<MetricName, PerPoint>>;
}

export interface LossGradResult {
  lossValue: number;
  /** Row-major n x 3 gradients, aligned with the input buffers. */
  gradS1: Float64Array;
  gradS2: Float64Array;
}

export interface DownsampleOptions {
  /** Output size (required). */
  m: number;
  /** Reconstruction cloud merged in before the final selection. */
  rec?: Float64Array;
  /** Reference cloud (required by the oracle scorer). */
  gt?: Float64Array;
  scorer?: "oracle" | "constant";
  beta?: number;
  gamma?: number;
  t?: number;
  /** Upsample factor before thinning. */
  s?: number;
  seed?: number;
}

const METRIC_FLAGS: Record<MetricName, string> = {
  cd_t: "--cd",
  cd_p: "--cd-p",
  hd: "--hd",
  dcd: "--dcd",
  emd: "--emd",
  emd_exact: "--emd-exact",
};

function metricArgs(opts: MetricOptions): string[] {
  const args: string[] = [];
  if (opts.alpha !== undefined) args.push("--alpha", String(opts.alpha));
  if (opts.lambda !== undefined) args.push("--lambda", String(opts.lambda));
  if (opts.exponentMode) args.push("--exponent-mode", opts.exponentMode);
  if (opts.variant) args.push("--variant", opts.variant);
  if (opts.epsilon !== undefined) args.push("--eps", String(opts.epsilon));
  if (opts.maxIters !== undefined)
    args.push("--max-iters", String(opts.maxIters));
  if (opts.emdNormalize) args.push("--emd-normalize", opts.emdNormalize);
  return args;
}

/** Evaluate several metrics between two clouds in one CLI invocation. */
export async function distances(
  a: Float64Array,
  b: Float64Array,
  metrics: MetricName[],
  opts: MetricOptions = {}
): Promise<DistanceResult> {
  validateCloudBuffer(a, "first cloud");
  validateCloudBuffer(b, "second cloud");
  if (metrics.length === 0) {
    throw new BufferValidationError("ValueError", "select at least one metric");
  }
  return withScratchDir(async (dir) => {
    const fa = join(dir, "a.xyz");
    const fb = join(dir, "b.xyz");
    await writeFile(fa, cloudToXyz(a));
    await writeFile(fb, cloudToXyz(b));
    const args = ["dist", fa, fb, "--json"];
    for (const m of metrics) args.push(METRIC_FLAGS[m]);
    args.push(...metricArgs(opts));
    if (opts.perPoint) args.push("--per-point");
    const doc = JSON.parse(await runCli(args));
    const result: DistanceResult = { values: {} };
    for (const m of metrics) {
      result.values[m] = doc.metrics[m] as number;
    }
    if (opts.perPoint && doc.per_point) {
      result.perPoint = {};
      for (const m of Object.keys(doc.per_point) as MetricName[]) {
        result.perPoint[m] = {
          src: Float64Array.from(doc.per_point[m].src as number[]),
          tgt: Float64Array.from(doc.per_point[m].tgt as number[]),
        };
      }
    }
    return result;
  });
}

/** Evaluate one metric; the scalar plus optional per-point arrays. */
export async function distance(
  a: Float64Array,
  b: Float64Array,
  metric: MetricName,
  opts: MetricOptions = {}
): Promise<{ value: number; perPoint?: PerPoint }> {
  const res = await distances(a, b, [metric], opts);
  return { value: res.values[metric] as number, perPoint: res.perPoint?.[metric] };
}

/** Loss value and per-point coordinate gradients for both clouds. */
export async function lossGrad(
  a: Float64Array,
  b: Float64Array,
  loss: LossName,
  opts: MetricOptions = {}
): Promise<LossGradResult> {
  validateCloudBuffer(a, "first cloud");
  validateCloudBuffer(b, "second cloud");
  return withScratchDir(async (dir) => {
    const fa = join(dir, "a.xyz");
    const fb = join(dir, "b.xyz");
    await writeFile(fa, cloudToXyz(a));
    await writeFile(fb, cloudToXyz(b));
    const args = ["dist", fa, fb, "--grad", loss, "--json", ...metricArgs(opts)];
    const doc = JSON.parse(await runCli(args));
    const g = doc.gradient;
    return {
      lossValue: g.loss_value as number,
      gradS1: Float64Array.from((g.grad_s1 as number[][]).flat()),
      gradS2: Float64Array.from((g.grad_s2 as number[][]).flat()),
    };
  });
}

/** Score-guided down-sampling; returns exactly 3*m values. */
export async function guidedDownsample(
  coarse: Float64Array,
  opts: DownsampleOptions
): Promise<Float64Array> {
  validateCloudBuffer(coarse, "coarse cloud");
  if (opts.rec) validateCloudBuffer(opts.rec, "reconstruction cloud");
  if (opts.gt) validateCloudBuffer(opts.gt, "reference cloud");
  if (!Number.isInteger(opts.m) || opts.m < 1) {
    throw new BufferValidationError(
      "InvalidCountError",
      `output size must be a positive integer, got ${opts.m}`
    );
  }
  return withScratchDir(async (dir) => {
    const fc = join(dir, "coarse.xyz");
    const fo = join(dir, "out.xyz");
    await writeFile(fc, cloudToXyz(coarse));
    const args = [
      "downsample",
      fc,
      "--m",
      String(opts.m),
      "--out",
      fo,
      "--scorer",
      opts.scorer ?? "oracle",
      "--seed",
      String(opts.seed ?? 0),
    ];
    if (opts.rec) {
      const fr = join(dir, "rec.xyz");
      await writeFile(fr, cloudToXyz(opts.rec));
      args.push("--rec", fr);
    }
    if (opts.gt) {
      const fg = join(dir, "gt.xyz");
      await writeFile(fg, cloudToXyz(opts.gt));
      args.push("--gt", fg);
    }
    if (opts.beta !== undefined) args.push("--beta", String(opts.beta));
    if (opts.gamma !== undefined) args.push("--gamma", String(opts.gamma));
    if (opts.t !== undefined) args.push("--t", String(opts.t));
    if (opts.s !== undefined) args.push("--s", String(opts.s));
    await runCli(args);
    const out = xyzToCloud(await readFile(fo, "utf8"));
    if (pointCount(out) !== opts.m) {
      throw new CliError(1, `expected ${opts.m} points, got ${pointCount(out)}`, args);
    }
    return out;
  });
}
