/** Job polling: follow a stage run to completion with per-year progress. */

import type { ApiClient } from "./api";
import type { JobStatus, RunDoc } from "./types";

export interface PollOptions {
  /** Delay between status polls, milliseconds. */
  intervalMs?: number;
  /** Abort after this long, milliseconds. */
  timeoutMs?: number;
  onProgress?: (status: JobStatus) => void;
  /** Injectable clock for tests. */
  sleep?: (ms: number) => Promise<void>;
}

export class JobFailed extends Error {
  constructor(
    readonly jobId: string,
    detail: string,
  ) {
    super(`job ${jobId} failed: ${detail}`);
    this.name = "JobFailed";
  }
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/** Poll until the job settles, reporting progress; resolve with the result. */
export async function awaitJob(
  client: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<RunDoc> {
  const interval = options.intervalMs ?? 250;
  const timeout = options.timeoutMs ?? 300_000;
  const sleep = options.sleep ?? defaultSleep;
  const deadline = Date.now() + timeout;
  for (;;) {
    const status = await client.jobStatus(jobId);
    options.onProgress?.(status);
    if (status.status === "failed") {
      throw new JobFailed(jobId, status.error ?? "unknown error");
    }
    if (status.status === "done") {
      return client.jobResult(jobId);
    }
    if (Date.now() >= deadline) {
      throw new JobFailed(jobId, `still running after ${timeout} ms`);
    }
    await sleep(interval);
  }
}

/** Percentage of simulated years, for progress bars. */
export function progressPercent(status: JobStatus): number {
  if (status.total_years <= 0) {
    return 0;
  }
  return Math.round((100 * status.done_years) / status.total_years);
}
