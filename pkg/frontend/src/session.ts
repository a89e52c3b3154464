/** Session state for the interactive workflow: pick keyframes on the
 * timeline (with I-frame markers), attach references with prompts, tune the
 * guidance scale, launch jobs, and compare two finished results frame by
 * frame and through X-T slices.
 *
 * Rendering targets are plain pixel buffers so the store runs headless in
 * tests; the browser layer paints them onto canvases. */

import { ApiClient, JobSnapshot, VideoMeta } from "./api.js";
import { canMark, validateKeyframes } from "./keyframes.js";
import { RasterImage, decodePgm, decodePpm } from "./ppm.js";

export const GUIDANCE_MIN = 0.0;
export const GUIDANCE_MAX = 2.0;
export const GUIDANCE_STEP = 0.1;

export interface Mark {
  frame: number;
  refId?: string;
  taskPrompt?: string;
  contentPrompt?: string;
}

export interface ComparePanes {
  frameA: RasterImage;
  frameB: RasterImage;
  xtA: RasterImage;
  xtB: RasterImage;
}

export class Session {
  video: VideoMeta | null = null;
  marks: Mark[] = [];
  guidance = 1.0;
  jobs: JobSnapshot[] = [];
  lastError = "";
  private submitting = false;

  constructor(readonly api: ApiClient, readonly pollMs = 1000) {}

  async loadVideoY4m(data: Uint8Array, name = ""): Promise<VideoMeta> {
    this.video = await this.api.uploadVideoY4m(data, name);
    this.marks = [];
    return this.video;
  }

  async loadVideoPair(y4m: Uint8Array, mp4: Uint8Array, name = ""): Promise<VideoMeta> {
    this.video = await this.api.uploadVideoPair(y4m, mp4, name);
    this.marks = [];
    return this.video;
  }

  get markedFrames(): number[] {
    return this.marks.map((m) => m.frame).sort((a, b) => a - b);
  }

  /** Add a timeline mark; refused (with an inline message) on rule violations. */
  timelineMark(frame: number): boolean {
    if (!this.video) {
      this.lastError = "no video loaded";
      return false;
    }
    const check = canMark(this.markedFrames, frame, this.video.t);
    if (!check.ok) {
      this.lastError = check.reason ?? "invalid mark";
      return false;
    }
    this.lastError = "";
    this.marks.push({ frame });
    this.marks.sort((a, b) => a.frame - b.frame);
    return true;
  }

  unmark(frame: number) {
    this.marks = this.marks.filter((m) => m.frame !== frame);
  }

  /** Replace marks with the server-reported I-frame positions. */
  snapToIframes(): boolean {
    if (!this.video) return false;
    const inside = this.video.iframes.filter((i) => i >= 0 && i < this.video!.t);
    const check = validateKeyframes(inside, this.video.t);
    if (!check.ok) {
      this.lastError = check.reason ?? "iframe set invalid";
      return false;
    }
    this.lastError = "";
    this.marks = inside.map((frame) => ({ frame }));
    return true;
  }

  setGuidance(value: number) {
    const snapped = Math.round(value / GUIDANCE_STEP) * GUIDANCE_STEP;
    this.guidance = Math.min(GUIDANCE_MAX, Math.max(GUIDANCE_MIN, Number(snapped.toFixed(1))));
  }

  async attachReference(frame: number, ppm: Uint8Array, taskPrompt = "", contentPrompt = ""): Promise<string> {
    const mark = this.marks.find((m) => m.frame === frame);
    if (!mark) throw new Error(`frame ${frame} is not marked`);
    const refId = await this.api.uploadReference(ppm, frame, taskPrompt, contentPrompt);
    mark.refId = refId;
    mark.taskPrompt = taskPrompt;
    mark.contentPrompt = contentPrompt;
    return refId;
  }

  /** Submit a restore job and poll it to a terminal state. */
  async runRestore(): Promise<JobSnapshot> {
    if (!this.video) throw new Error("no video loaded");
    if (this.submitting) throw new Error("a submit is already in flight");
    const frames = this.markedFrames;
    const check = validateKeyframes(frames, this.video.t);
    if (!check.ok) throw new Error(check.reason);
    const refs: Record<string, string> = {};
    for (const m of this.marks) {
      if (m.refId) refs[String(m.frame)] = m.refId;
    }
    this.submitting = true;
    try {
      const jobId = await this.api.submitJob({
        video_id: this.video.id,
        keyframes: frames,
        ref_source: Object.keys(refs).length ? "uploaded" : "none",
        refs,
        guidance_s: this.guidance,
      });
      let snap = await this.api.jobStatus(jobId);
      while (snap.status === "queued" || snap.status === "running") {
        await sleep(this.pollMs);
        snap = await this.api.jobStatus(jobId);
      }
      this.upsertJob(snap);
      return snap;
    } finally {
      this.submitting = false;
    }
  }

  private upsertJob(snap: JobSnapshot) {
    const i = this.jobs.findIndex((j) => j.job_id === snap.job_id);
    if (i >= 0) this.jobs[i] = snap;
    else this.jobs.push(snap);
  }

  jobLabel(snap: JobSnapshot): string {
    const mode = snap.guidance_s === 0 || snap.ref_source === "none" ? "blind" : `s=${snap.guidance_s}`;
    return `${snap.job_id.slice(0, 8)} (${mode})`;
  }

  /** Fetch both panes for two finished jobs: frame t plus X-T slices at `row`. */
  async compareView(jobA: string, jobB: string, frame: number, row: number): Promise<ComparePanes> {
    const [fa, fb, xa, xb] = await Promise.all([
      this.api.jobFrame(jobA, frame),
      this.api.jobFrame(jobB, frame),
      this.api.jobXt(jobA, row),
      this.api.jobXt(jobB, row),
    ]);
    return {
      frameA: decodePpm(fa),
      frameB: decodePpm(fb),
      xtA: decodePgm(xa),
      xtB: decodePgm(xb),
    };
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
