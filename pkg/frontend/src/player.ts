import type { Player } from "./runner.js";

/** HTMLAudioElement-backed playback with preloading.
 *
 * Browsers require a user gesture before audio can start; call unlock() from
 * the start-button handler.
 */
export class HtmlAudioPlayer implements Player {
  private cache = new Map<string, HTMLAudioElement>();
  private unlocked = false;

  constructor(private readonly baseUrl: string = "") {}

  unlock(): void {
    this.unlocked = true;
  }

  preload(urls: string[]): void {
    for (const url of urls) {
      if (!this.cache.has(url)) {
        const audio = new Audio(this.baseUrl + url);
        audio.preload = "auto";
        this.cache.set(url, audio);
      }
    }
  }

  async play(url: string): Promise<void> {
    if (!this.unlocked) {
      throw new Error("audio locked; press start first");
    }
    let audio = this.cache.get(url);
    if (!audio) {
      audio = new Audio(this.baseUrl + url);
      this.cache.set(url, audio);
    }
    audio.currentTime = 0;
    await audio.play();
    await new Promise<void>((resolve, reject) => {
      const done = () => {
        cleanup();
        resolve();
      };
      const bad = () => {
        cleanup();
        reject(new Error(`playback error for ${url}`));
      };
      const cleanup = () => {
        audio!.removeEventListener("ended", done);
        audio!.removeEventListener("error", bad);
      };
      audio!.addEventListener("ended", done);
      audio!.addEventListener("error", bad);
    });
  }
}
