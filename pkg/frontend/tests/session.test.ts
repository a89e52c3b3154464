/** Scripted end-to-end session against a live service: upload a Y4M/MP4
 * pair, snap keyframes to I-frames, set s=1.2, attach a reference, run the
 * job to completion, and render both the frame panes and the X-T panes. */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Session } from "../src/session.js";

const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = join(here, "..", "..");
const PORT = 8765 + Math.floor(Math.random() * 500);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let assets: string;

async function serviceReady(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/v1/jobs/warmup-probe`);
      if (res.status === 404) return;
    } catch {
      /* not listening yet */
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  assets = mkdtempSync(join(tmpdir(), "sparkprop-ui-"));
  execFileSync("python3", [join(here, "make_assets.py"), assets], { stdio: "inherit" });
  server = spawn(
    "python3",
    [
      "-m",
      "sparkprop.cli",
      "serve",
      "--port",
      String(PORT),
      "--checkpoint",
      join(assets, "ckpt.spkv"),
    ],
    { cwd: repoRoot, env: { ...process.env, PYTHONPATH: join(repoRoot, "src") }, stdio: "pipe" },
  );
  await serviceReady();
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe("scripted interactive session", () => {
  it("runs mark -> reference -> s=1.2 -> restore -> compare", async () => {
    const api = new ApiClient(BASE);
    const session = new Session(api, 100); // fast polling in tests

    // upload the Y4M + MP4 sidecar pair: I-frame markers come back
    const y4m = new Uint8Array(readFileSync(join(assets, "clip.y4m")));
    const mp4 = new Uint8Array(readFileSync(join(assets, "clip.mp4")));
    const meta = await session.loadVideoPair(y4m, mp4, "clip.y4m");
    expect(meta.t).toBe(33);
    expect(meta.iframes).toEqual([0, 8, 16, 24, 32]);

    // snap timeline marks to the server-reported I-frames
    expect(session.snapToIframes()).toBe(true);
    expect(session.markedFrames).toEqual([0, 8, 16, 24, 32]);

    // the gap rule is enforced inline, mirroring the server
    expect(session.timelineMark(2)).toBe(false);
    expect(session.lastError).toMatch(/gap/);

    // attach an uploaded reference to frame 0 with prompt metadata
    const ppm = new Uint8Array(readFileSync(join(assets, "ref.ppm")));
    const refId = await session.attachReference(0, ppm, "upscale and deblur", "checker pattern");
    expect(refId.length).toBeGreaterThan(0);

    // tune guidance to 1.2 through the slider contract
    session.setGuidance(1.2000001);
    expect(session.guidance).toBeCloseTo(1.2, 6);

    // run the job to a terminal state via 1 s-style polling
    const snap = await session.runRestore();
    expect(snap.status).toBe("done");
    expect(snap.guidance_s).toBeCloseTo(1.2);

    // a second blind run for the A/B comparison
    session.marks = [];
    session.setGuidance(0.0);
    const blind = await session.runRestore();
    expect(blind.status).toBe("done");
    expect(session.jobLabel(blind)).toContain("blind");
    expect(session.jobs.length).toBe(2);

    // compare view renders synchronized frame panes and X-T panes
    const panes = await session.compareView(snap.job_id, blind.job_id, 4, 8);
    expect(panes.frameA.width).toBe(16);
    expect(panes.frameA.height).toBe(16);
    expect(panes.frameB.width).toBe(16);
    expect(panes.xtA.width).toBe(16);
    expect(panes.xtA.height).toBe(33); // one row per frame, time downward
    expect(panes.xtB.height).toBe(33);
    expect(panes.frameA.rgba.some((v) => v !== 0)).toBe(true);
    expect(panes.xtA.rgba.some((v) => v !== 0)).toBe(true);
  }, 120_000);

  it("surfaces server rejections verbatim", async () => {
    const api = new ApiClient(BASE);
    await expect(
      api.submitJob({ video_id: "missing", ref_source: "none", guidance_s: 0 }),
    ).rejects.toThrow(/not found/);
  });
});
