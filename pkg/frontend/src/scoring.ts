import type { Answer, ScoreOracle } from "./types.js";

/** SHA-256 hex via WebCrypto (available in browsers and node >= 19). */
export async function sha256Hex(text: string): Promise<string> {
  const data = new TextEncoder().encode(text);
  const digest = await globalThis.crypto.subtle.digest("SHA-256", data);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

/** True when the digest of `trialId:answer:salt` matches the packaged one.
 *
 * The oracle tells the runner whether an answer was correct without carrying
 * the hidden interval identity itself; only the transient boolean leaves this
 * function.
 */
export async function scoreAnswer(
  oracle: ScoreOracle,
  trialId: string,
  answer: Answer,
): Promise<boolean> {
  const expected = oracle.digests[trialId];
  if (expected === undefined) {
    throw new Error(`no scoring digest for trial ${trialId}`);
  }
  const got = await sha256Hex(`${trialId}:${answer}:${oracle.salt}`);
  return got === expected;
}
