/** Client-side keyframe validation, mirroring the server's rules exactly:
 * indices strictly increasing, nonnegative, inside the clip, consecutive
 * gaps strictly greater than 4, and at most ceil(T/4) marks.  The server
 * stays authoritative; this only prevents doomed submissions. */

export const MIN_GAP = 4;

export interface ValidationResult {
  ok: boolean;
  reason?: string;
}

export function validateKeyframes(indices: number[], numFrames: number): ValidationResult {
  for (const i of indices) {
    if (!Number.isInteger(i)) return { ok: false, reason: `index ${i} is not an integer` };
    if (i < 0) return { ok: false, reason: `negative keyframe index ${i}` };
    if (i >= numFrames) return { ok: false, reason: `keyframe ${i} outside clip of ${numFrames} frames` };
  }
  for (let k = 1; k < indices.length; k++) {
    const a = indices[k - 1];
    const b = indices[k];
    if (b <= a) return { ok: false, reason: `indices not strictly increasing at ${b}` };
    if (b - a <= MIN_GAP) {
      return { ok: false, reason: `keyframes ${a} and ${b} are ${b - a} apart; gap must exceed ${MIN_GAP}` };
    }
  }
  const bound = Math.ceil(numFrames / 4);
  if (indices.length > bound) {
    return { ok: false, reason: `${indices.length} keyframes exceed the ceil(T/4) = ${bound} bound` };
  }
  return { ok: true };
}

/** Whether `frame` can join `existing` without violating the rules. */
export function canMark(existing: number[], frame: number, numFrames: number): ValidationResult {
  if (existing.includes(frame)) return { ok: false, reason: `frame ${frame} is already marked` };
  const merged = [...existing, frame].sort((a, b) => a - b);
  return validateKeyframes(merged, numFrames);
}
