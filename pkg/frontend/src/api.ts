/** Typed client for the /v1 endpoints; every state round-trip goes through
 * these calls and nothing else. */

export interface VideoMeta {
  id: string;
  t: number;
  h: number;
  w: number;
  fps: [number, number];
  iframes: number[];
}

export interface JobSnapshot {
  job_id: string;
  video_id: string;
  keyframes: number[];
  ref_source: string;
  guidance_s: number;
  status: "queued" | "running" | "done" | "failed";
  progress: number;
  error: string;
  result_id: string | null;
}

export interface JobRequest {
  video_id: string;
  keyframes?: number[];
  strategy?: "manual" | "iframe" | "random" | "uniform";
  ref_source: "uploaded" | "oracle_augmented_gt" | "none";
  refs?: Record<string, string>;
  guidance_s: number;
  gt_video_id?: string;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async checked(res: Response): Promise<Response> {
    if (!res.ok) {
      let detail = `${res.status}`;
      try {
        const body = await res.json();
        detail = body.detail ?? detail;
      } catch {
        /* body not json */
      }
      throw new Error(detail);
    }
    return res;
  }

  async uploadVideoY4m(data: Uint8Array, name = ""): Promise<VideoMeta> {
    const res = await fetch(`${this.baseUrl}/v1/videos?name=${encodeURIComponent(name)}`, {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: data as unknown as BodyInit,
    });
    return (await this.checked(res)).json();
  }

  async uploadVideoPair(y4m: Uint8Array, mp4: Uint8Array, name = ""): Promise<VideoMeta> {
    const res = await fetch(`${this.baseUrl}/v1/videos`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        y4m_b64: toBase64(y4m),
        mp4_b64: toBase64(mp4),
        name,
      }),
    });
    return (await this.checked(res)).json();
  }

  async videoMeta(videoId: string): Promise<VideoMeta> {
    const res = await fetch(`${this.baseUrl}/v1/videos/${videoId}`);
    return (await this.checked(res)).json();
  }

  async uploadReference(
    ppm: Uint8Array,
    frameIndex: number,
    taskPrompt = "",
    contentPrompt = "",
  ): Promise<string> {
    const params = new URLSearchParams({
      frame_index: String(frameIndex),
      task_prompt: taskPrompt,
      content_prompt: contentPrompt,
    });
    const res = await fetch(`${this.baseUrl}/v1/references?${params}`, {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: ppm as unknown as BodyInit,
    });
    return (await this.checked(res)).json().then((j) => j.ref_id);
  }

  async submitJob(req: JobRequest): Promise<string> {
    const res = await fetch(`${this.baseUrl}/v1/jobs`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return (await this.checked(res)).json().then((j) => j.job_id);
  }

  async jobStatus(jobId: string): Promise<JobSnapshot> {
    const res = await fetch(`${this.baseUrl}/v1/jobs/${jobId}`);
    return (await this.checked(res)).json();
  }

  async videoFrame(videoId: string, t: number): Promise<Uint8Array> {
    const res = await fetch(`${this.baseUrl}/v1/videos/${videoId}/frame?t=${t}`);
    return new Uint8Array(await (await this.checked(res)).arrayBuffer());
  }

  async jobFrame(jobId: string, t: number): Promise<Uint8Array> {
    const res = await fetch(`${this.baseUrl}/v1/jobs/${jobId}/frame?t=${t}`);
    return new Uint8Array(await (await this.checked(res)).arrayBuffer());
  }

  async jobXt(jobId: string, row: number): Promise<Uint8Array> {
    const res = await fetch(`${this.baseUrl}/v1/jobs/${jobId}/xt?row=${row}`);
    return new Uint8Array(await (await this.checked(res)).arrayBuffer());
  }
}

function toBase64(bytes: Uint8Array): string {
  let bin = "";
  for (let i = 0; i < bytes.length; i++) bin += String.fromCharCode(bytes[i]);
  // btoa exists in browsers; Buffer in node test runs
  if (typeof btoa !== "undefined") return btoa(bin);
  return Buffer.from(bytes).toString("base64");
}
