/** Browser wiring: timeline with I-frame markers, guidance slider, job list
 * with 1 s polling, and the A/B comparison view (synchronized frames plus
 * X-T slice panes). */

import { ApiClient } from "./api.js";
import { GUIDANCE_MAX, GUIDANCE_MIN, GUIDANCE_STEP, Session } from "./session.js";
import { RasterImage } from "./ppm.js";

const api = new ApiClient("");
const session = new Session(api, 1000);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function paint(canvas: HTMLCanvasElement, img: RasterImage, scale = 3) {
  canvas.width = img.width * scale;
  canvas.height = img.height * scale;
  const ctx = canvas.getContext("2d")!;
  const tmp = document.createElement("canvas");
  tmp.width = img.width;
  tmp.height = img.height;
  tmp.getContext("2d")!.putImageData(new ImageData(img.rgba as Uint8ClampedArray<ArrayBuffer>, img.width, img.height), 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function drawTimeline() {
  const canvas = el<HTMLCanvasElement>("timeline");
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!session.video) return;
  const t = session.video.t;
  ctx.fillStyle = "#ddd";
  ctx.fillRect(0, 18, canvas.width, 6);
  for (const i of session.video.iframes) {
    const x = (i / Math.max(t - 1, 1)) * canvas.width;
    ctx.fillStyle = "#2a7";
    ctx.fillRect(x - 1, 10, 2, 22);
  }
  for (const m of session.marks) {
    const x = (m.frame / Math.max(t - 1, 1)) * canvas.width;
    ctx.fillStyle = m.refId ? "#d22" : "#f90";
    ctx.beginPath();
    ctx.moveTo(x, 8);
    ctx.lineTo(x - 5, 0);
    ctx.lineTo(x + 5, 0);
    ctx.closePath();
    ctx.fill();
  }
  el<HTMLSpanElement>("marks-label").textContent = session.marks
    .map((m) => `${m.frame + 1}${m.refId ? "*" : ""}`)  // 1-based display labels
    .join(", ") || "(none)";
}

function setStatus(text: string, isError = false) {
  const node = el<HTMLSpanElement>("status");
  node.textContent = text;
  node.style.color = isError ? "#c00" : "#333";
}

function refreshJobList() {
  const list = el<HTMLUListElement>("jobs");
  list.innerHTML = "";
  for (const snap of session.jobs) {
    const li = document.createElement("li");
    li.textContent = `${session.jobLabel(snap)}: ${snap.status} ${(snap.progress * 100).toFixed(0)}%`
      + (snap.error ? ` (${snap.error})` : "");
    for (const sel of ["compare-a", "compare-b"] as const) {
      const dropdown = el<HTMLSelectElement>(sel);
      if (!Array.from(dropdown.options).some((o) => o.value === snap.job_id) && snap.status === "done") {
        const opt = document.createElement("option");
        opt.value = snap.job_id;
        opt.textContent = session.jobLabel(snap);
        dropdown.appendChild(opt);
      }
    }
    list.appendChild(li);
  }
}

async function refreshCompare() {
  const a = el<HTMLSelectElement>("compare-a").value;
  const b = el<HTMLSelectElement>("compare-b").value;
  if (!a || !b || !session.video) return;
  const frame = parseInt(el<HTMLInputElement>("scrub").value, 10);
  const row = parseInt(el<HTMLInputElement>("xt-row").value, 10);
  try {
    const panes = await session.compareView(a, b, frame, row);
    paint(el<HTMLCanvasElement>("pane-a"), panes.frameA);
    paint(el<HTMLCanvasElement>("pane-b"), panes.frameB);
    paint(el<HTMLCanvasElement>("xt-a"), panes.xtA);
    paint(el<HTMLCanvasElement>("xt-b"), panes.xtB);
    setStatus(`comparing frame ${frame + 1}, x-t row ${row}`);
  } catch (err) {
    setStatus(String(err), true);
  }
}

export function boot() {
  el<HTMLInputElement>("guidance").min = String(GUIDANCE_MIN);
  el<HTMLInputElement>("guidance").max = String(GUIDANCE_MAX);
  el<HTMLInputElement>("guidance").step = String(GUIDANCE_STEP);

  el<HTMLInputElement>("video-file").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      const meta = await session.loadVideoY4m(new Uint8Array(await file.arrayBuffer()), file.name);
      setStatus(`loaded ${file.name}: ${meta.t} frames ${meta.w}x${meta.h}, ${meta.iframes.length} I-frames`);
      el<HTMLInputElement>("scrub").max = String(meta.t - 1);
      el<HTMLInputElement>("xt-row").max = String(meta.h - 1);
      drawTimeline();
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  el<HTMLCanvasElement>("timeline").addEventListener("click", (ev) => {
    if (!session.video) return;
    const canvas = el<HTMLCanvasElement>("timeline");
    const frac = ev.offsetX / canvas.width;
    const frame = Math.round(frac * (session.video.t - 1));
    if (!session.timelineMark(frame)) {
      setStatus(session.lastError, true);
    } else {
      setStatus(`marked frame ${frame + 1}`);
    }
    drawTimeline();
  });

  el<HTMLButtonElement>("snap-iframes").addEventListener("click", () => {
    if (session.snapToIframes()) setStatus("snapped marks to I-frames");
    else setStatus(session.lastError, true);
    drawTimeline();
  });

  el<HTMLButtonElement>("clear-marks").addEventListener("click", () => {
    session.marks = [];
    drawTimeline();
  });

  el<HTMLInputElement>("guidance").addEventListener("input", (ev) => {
    session.setGuidance(parseFloat((ev.target as HTMLInputElement).value));
    el<HTMLSpanElement>("guidance-label").textContent = session.guidance.toFixed(1);
  });

  el<HTMLInputElement>("ref-file").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file || !session.marks.length) return;
    const frame = session.marks[session.marks.length - 1].frame;
    try {
      await session.attachReference(
        frame,
        new Uint8Array(await file.arrayBuffer()),
        el<HTMLInputElement>("task-prompt").value,
        el<HTMLInputElement>("content-prompt").value,
      );
      setStatus(`reference attached to frame ${frame + 1}`);
      drawTimeline();
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  el<HTMLButtonElement>("run").addEventListener("click", async () => {
    try {
      setStatus("running...");
      const poll = setInterval(refreshJobList, 1000);
      const snap = await session.runRestore();
      clearInterval(poll);
      refreshJobList();
      setStatus(snap.status === "done" ? "job finished" : `job failed: ${snap.error}`, snap.status !== "done");
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  for (const id of ["compare-a", "compare-b", "scrub", "xt-row"]) {
    el(id).addEventListener("change", refreshCompare);
    el(id).addEventListener("input", refreshCompare);
  }
}

boot();
