/**
 * Model-spec loading: a JSON file names the translator and tagger this
 * adapter serves. Paths inside the spec are resolved against the spec file.
 *
 * Wrapping a real model: implement the two-method shape below (token lists
 * in, token/tag lists out) and register it here; the serving loop and the
 * protocol framing stay untouched.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { DictionaryTranslator, Reorder, UnknownPolicy, loadLexicon } from "./dictionary";
import { GazetteerTagger } from "./gazetteer";

export interface Translator {
  translate(tokens: string[], src: string, tgt: string): string[];
}

export interface Tagger {
  tag(tokens: string[]): string[];
}

export interface Models {
  translator?: Translator;
  tagger?: Tagger;
}

class EchoTranslator implements Translator {
  translate(tokens: string[]): string[] {
    return [...tokens];
  }
}

export function loadModels(specPath: string): Models {
  const raw = JSON.parse(fs.readFileSync(specPath, "utf-8"));
  const base = path.dirname(path.resolve(specPath));
  const models: Models = {};

  const t = raw.translator;
  if (t) {
    if (t.kind === "echo") {
      models.translator = new EchoTranslator();
    } else if (t.kind === "dictionary" || t.kind === undefined) {
      const translator = new DictionaryTranslator(
        (t.reorder ?? "none") as Reorder,
        (t.unknown ?? "copy") as UnknownPolicy,
      );
      const pairs = t.pairs ?? {};
      for (const key of Object.keys(pairs)) {
        const dash = key.indexOf("-");
        if (dash < 1) throw new Error(`bad language pair ${JSON.stringify(key)}`);
        const lexicon = loadLexicon(path.resolve(base, pairs[key]));
        translator.addPair(key.slice(0, dash), key.slice(dash + 1), lexicon, !!t.bidirectional);
      }
      models.translator = translator;
    } else {
      throw new Error(`unknown translator kind ${JSON.stringify(t.kind)}`);
    }
  }

  const g = raw.tagger;
  if (g) {
    if (g.kind === "gazetteer" || g.kind === undefined) {
      models.tagger = GazetteerTagger.fromFile(path.resolve(base, g.path));
    } else {
      throw new Error(`unknown tagger kind ${JSON.stringify(g.kind)}`);
    }
  }

  return models;
}
