/**
 * Flat buffer validation and text serialization for point clouds.
 *
 * Clouds cross the boundary as contiguous row-major n x 3 Float64Arrays.
 * Serialization uses shortest round-trip decimal formatting on both sides
 * (JavaScript Number.prototype.toString and Python repr), so coordinates
 * and results survive the text round trip bit for bit.
 */

/** Boundary validation failure; `name` carries the core error name. */
export class BufferValidationError extends Error {
  constructor(coreName: string, message: string) {
    super(message);
    this.name = coreName;
  }
}

/** Reject buffers that are empty, misshaped, or contain non-finite entries. */
export function validateCloudBuffer(buf: Float64Array, label = "cloud"): void {
  if (!(buf instanceof Float64Array)) {
    throw new BufferValidationError(
      "ShapeMismatchError",
      `${label}: expected a Float64Array`
    );
  }
  if (buf.length === 0) {
    throw new BufferValidationError(
      "EmptyCloudError",
      `${label}: buffer is empty`
    );
  }
  if (buf.length % 3 !== 0) {
    throw new BufferValidationError(
      "ShapeMismatchError",
      `${label}: length ${buf.length} is not a multiple of 3`
    );
  }
  for (let i = 0; i < buf.length; i++) {
    if (!Number.isFinite(buf[i])) {
      throw new BufferValidationError(
        "NonFiniteError",
        `${label}: non-finite value at flat index ${i} (point ${Math.floor(i / 3)})`
      );
    }
  }
}

export function pointCount(buf: Float64Array): number {
  return buf.length / 3;
}

/** Serialize a validated buffer as .xyz text (one point per line). */
export function cloudToXyz(buf: Float64Array): string {
  const lines: string[] = new Array(buf.length / 3);
  for (let i = 0, row = 0; i < buf.length; i += 3, row++) {
    lines[row] = `${buf[i]} ${buf[i + 1]} ${buf[i + 2]}`;
  }
  return lines.join("\n") + "\n";
}

/** Parse .xyz text into a flat buffer (comments and blank lines skipped). */
export function xyzToCloud(text: string): Float64Array {
  const values: number[] = [];
  const lines = text.split("\n");
  for (let lineNo = 1; lineNo <= lines.length; lineNo++) {
    const line = lines[lineNo - 1].trim();
    if (line === "" || line.startsWith("#")) continue;
    const fields = line.split(/\s+/);
    if (fields.length !== 3) {
      throw new BufferValidationError(
        "CloudParseError",
        `line ${lineNo}: expected 3 coordinates, found ${fields.length}`
      );
    }
    for (const f of fields) {
      const v = Number(f);
      if (Number.isNaN(v) && f !== "nan") {
        throw new BufferValidationError(
          "CloudParseError",
          `line ${lineNo}: invalid number ${JSON.stringify(f)}`
        );
      }
      values.push(v);
    }
  }
  return Float64Array.from(values);
}
